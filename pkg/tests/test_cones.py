"""Cone membership, shuffle relations, and subspace extraction."""

import random

import pytest

from isograss.cones import (
    NotDecomposableError,
    extract_subspace,
    failing_relation,
    in_grassmann_cone,
    in_isotropic_cone,
    plucker_relations,
    random_isotropic_frame,
    random_isotropic_rows,
    random_non_cone_form,
)
from isograss.exterior import (
    HYPERBOLIC,
    PLAIN,
    MultiVector,
    wedge,
    wedge_all,
)
from isograss.quadratic import (
    QuadraticSpace,
    Subspace,
    maximal_isotropic,
    orthogonal_complement,
)
from isograss.rationals import Q


class TestRelationFamilies:
    def test_klein_quadric(self):
        rels = plucker_relations(2, 4, PLAIN)
        assert len(rels) == 1
        # x12 x34 - x13 x24 + x14 x23 up to overall sign
        expected = {
            ((1, 2), (3, 4)): 1,
            ((1, 3), (2, 4)): -1,
            ((1, 4), (2, 3)): 1,
        }
        got = {(a, b): c for a, b, c in rels[0].terms}
        if got[((1, 2), (3, 4))] < 0:
            got = {k: -v for k, v in got.items()}
        assert got == expected

    def test_grade_one_empty(self):
        assert plucker_relations(1, 6, PLAIN) == ()

    def test_2_5_count(self):
        assert len(plucker_relations(2, 5, PLAIN)) == 5

    @pytest.mark.parametrize(
        "k,n",
        [(2, 4), (2, 5), (3, 6), (3, 7), (4, 8), (4, 9), (5, 10), (5, 11)],
    )
    def test_vanish_on_decomposables(self, k, n):
        rng = random.Random(f"dec:{k}:{n}")
        rels = plucker_relations(k, n, HYPERBOLIC)
        sp = QuadraticSpace.standard(n)
        for _ in range(500):
            rows = [
                [Q(rng.randint(-6, 6)) for _ in range(n)] for _ in range(k)
            ]
            mv = wedge_all(
                [MultiVector.from_vector(r, HYPERBOLIC) for r in rows]
            )
            if not mv.terms:
                continue
            assert failing_relation(mv) is None

    @pytest.mark.parametrize("k,n", [(2, 6), (3, 6), (3, 7), (4, 8)])
    def test_detect_non_decomposables(self, k, n):
        rng = random.Random(f"nondec:{k}:{n}")
        sp = QuadraticSpace.standard(n)
        for _ in range(125):
            mv = random_non_cone_form(sp, k, rng)
            if in_grassmann_cone(mv):
                # random_non_cone_form rejects the isotropic cone only;
                # decomposable-but-anisotropic samples are fine there but
                # not for this test
                continue
            assert failing_relation(mv) is not None


class TestMembershipExamples:
    def test_basis_wedge_in(self):
        assert in_grassmann_cone(MultiVector.basis(7, (1, 2, 3)))

    def test_omega7_out(self):
        from isograss.counterexamples import omega7

        assert not in_grassmann_cone(omega7())

    def test_omega8_out(self):
        from isograss.counterexamples import omega8

        assert not in_grassmann_cone(omega8())


class TestExtractSubspace:
    def test_basis(self):
        sp = QuadraticSpace.standard(6)
        sub = extract_subspace(MultiVector.basis(6, (1, 2)), sp)
        assert sub == Subspace(sp, [sp.basis_vector(1), sp.basis_vector(2)])

    def test_shifted(self):
        sp = QuadraticSpace.standard(6)
        e1 = MultiVector.basis(6, (1,))
        e2 = MultiVector.basis(6, (2,))
        e3 = MultiVector.basis(6, (3,))
        mv = wedge(e1 + e2, e3)
        sub = extract_subspace(mv, sp)
        v12 = tuple(a + b for a, b in zip(sp.basis_vector(1), sp.basis_vector(2)))
        assert sub == Subspace(sp, [v12, sp.basis_vector(3)])

    def test_scaling_invariance(self):
        sp = QuadraticSpace.standard(7)
        mv = MultiVector.basis(7, (1, 2, 3), coeff=5)
        sub = extract_subspace(mv, sp)
        assert sub == Subspace(sp, [sp.basis_vector(i) for i in (1, 2, 3)])

    def test_roundtrip_random(self):
        rng = random.Random(17)
        sp = QuadraticSpace.standard(9)
        for _ in range(50):
            rows = [
                [Q(rng.randint(-5, 5)) for _ in range(9)] for _ in range(4)
            ]
            mv = wedge_all([MultiVector.from_vector(r, HYPERBOLIC) for r in rows])
            if not mv.terms:
                continue
            sub = extract_subspace(mv, sp)
            assert sub == Subspace(sp, rows)

    def test_rejects_zero(self):
        sp = QuadraticSpace.standard(6)
        with pytest.raises(NotDecomposableError):
            extract_subspace(MultiVector.zero(6, 2), sp)

    def test_rejects_non_decomposable(self):
        sp = QuadraticSpace.standard(6)
        mv = MultiVector.basis(6, (1, 2)) + MultiVector.basis(6, (3, -1))
        with pytest.raises(NotDecomposableError):
            extract_subspace(mv, sp)


class TestIsotropicCone:
    def test_isotropic_frame_in(self):
        sp = QuadraticSpace.standard(7)
        assert in_isotropic_cone(sp, MultiVector.basis(7, (1, 2, 3)))

    def test_hyperbolic_pair_out(self):
        sp = QuadraticSpace.standard(7)
        assert not in_isotropic_cone(sp, MultiVector.basis(7, (1, -1)))

    def test_j8_top_frame(self):
        from isograss.quadratic import space_from_name

        j8 = space_from_name("j8")
        assert in_isotropic_cone(j8, MultiVector.basis(8, (1, 2, 3, 4)))

    def test_zero_in(self):
        sp = QuadraticSpace.standard(7)
        assert in_isotropic_cone(sp, MultiVector.zero(7, 3))

    def test_scaling_invariance(self):
        sp = QuadraticSpace.standard(8)
        rng = random.Random(23)
        for _ in range(20):
            fr = random_isotropic_frame(sp, 3, rng)
            assert in_isotropic_cone(sp, fr) == in_isotropic_cone(
                sp, fr.scale(Q(-7, 3))
            )


class TestRandomFrames:
    def test_postcondition(self):
        rng = random.Random(2)
        for dim in (6, 7, 8, 9, 10):
            sp = QuadraticSpace.standard(dim)
            for k in range(1, sp.p + 1):
                fr = random_isotropic_frame(sp, k, rng)
                assert in_isotropic_cone(sp, fr)

    def test_maximal_frame_self_perp(self):
        sp = QuadraticSpace.standard(8)
        rng = random.Random(4)
        for _ in range(10):
            rows = random_isotropic_rows(sp, 4, rng)
            sub = Subspace(sp, rows)
            assert sub.dim == 4
            assert orthogonal_complement(sp, sub) == sub

    def test_rejects_oversize(self):
        sp = QuadraticSpace.standard(8)
        with pytest.raises(ValueError):
            random_isotropic_frame(sp, 5, random.Random(0))

    def test_determinism(self):
        sp = QuadraticSpace.standard(9)
        a = random_isotropic_frame(sp, 4, random.Random("s"))
        c = random_isotropic_frame(sp, 4, random.Random("s"))
        assert a == c

    def test_two_components_dim8(self):
        # frames in dim 8 split by parity of dim(L cap span{e_1..e_4})
        sp = QuadraticSpace.standard(8)
        w = maximal_isotropic(sp)
        rng = random.Random(31)
        parities = set()
        for _ in range(60):
            rows = random_isotropic_rows(sp, 4, rng)
            inter = Subspace(sp, rows).intersect(w)
            parities.add(inter.dim % 2)
        assert parities == {0, 1}
