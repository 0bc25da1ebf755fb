"""Quadratic spaces: forms, isotropy, hyperbolic completions."""

import random

import pytest

from isograss.quadratic import (
    QuadraticSpace,
    Subspace,
    WittIndexError,
    bilinear,
    common_hyperbolic_basis,
    complete_hyperbolic,
    is_isotropic,
    is_isotropic_subspace,
    maximal_isotropic,
    orthogonal_complement,
    random_isotropic_vector,
    space_from_name,
    witt_index,
)
from isograss.rationals import Q


def add(*vecs):
    return tuple(sum(col, Q(0)) for col in zip(*vecs))


def scale(c, v):
    return tuple(Q(c) * x for x in v)


class TestBilinear:
    def test_hyperbolic_pairing(self):
        sp = QuadraticSpace.standard(6)
        assert bilinear(sp, sp.basis_vector(1), sp.basis_vector(-1)) == 1

    def test_j7_e0(self):
        j7 = space_from_name("j7")
        e0 = j7.basis_vector(0)
        assert bilinear(j7, e0, e0) == Q(-1, 2)

    def test_expanded(self):
        sp = QuadraticSpace.standard(6)
        v = add(sp.basis_vector(1), sp.basis_vector(-1))
        assert bilinear(sp, v, v) == 2


class TestIsotropy:
    def test_basis_vector(self):
        sp = QuadraticSpace.standard(7)
        assert is_isotropic(sp, sp.basis_vector(1))

    def test_hyperbolic_sum_not(self):
        sp = QuadraticSpace.standard(7)
        assert not is_isotropic(sp, add(sp.basis_vector(1), sp.basis_vector(-1)))

    def test_e0_replacement(self):
        for c0 in (Q(1, 2), Q(-1, 4), Q(3)):
            sp = QuadraticSpace.standard(7, c0=c0)
            v = add(
                sp.basis_vector(0),
                sp.basis_vector(1),
                scale(-c0, sp.basis_vector(-1)),
            )
            assert is_isotropic(sp, v)

    def test_subspaces(self):
        sp = QuadraticSpace.standard(7)
        assert is_isotropic_subspace(
            sp, Subspace(sp, [sp.basis_vector(1), sp.basis_vector(2)])
        )
        assert not is_isotropic_subspace(
            sp, Subspace(sp, [sp.basis_vector(1), sp.basis_vector(-1)])
        )

    def test_mixed_signed_span(self):
        # span{e_1..e_q, e_-(q+1)..e_-p} is isotropic
        sp = QuadraticSpace.standard(8)
        rows = [sp.basis_vector(1), sp.basis_vector(2), sp.basis_vector(-3), sp.basis_vector(-4)]
        assert is_isotropic_subspace(sp, Subspace(sp, rows))


class TestComplement:
    def test_single_vector(self):
        sp = QuadraticSpace.standard(7)
        comp = orthogonal_complement(sp, Subspace(sp, [sp.basis_vector(1)]))
        assert comp.dim == 6
        # complement of e1 = everything except e-1
        expected = Subspace(
            sp, [sp.basis_vector(l) for l in sp.labels if l != -1]
        )
        assert comp == expected

    def test_full_and_zero(self):
        sp = QuadraticSpace.standard(6)
        full = Subspace(sp, [sp.basis_vector(l) for l in sp.labels])
        assert orthogonal_complement(sp, full).dim == 0
        zero = Subspace(sp, [])
        assert orthogonal_complement(sp, zero) == full

    def test_involution(self):
        sp = QuadraticSpace.standard(9)
        rng = random.Random(3)
        for _ in range(10):
            rows = [
                tuple(Q(rng.randint(-5, 5)) for _ in range(9)) for _ in range(3)
            ]
            sub = Subspace(sp, rows)
            assert orthogonal_complement(sp, orthogonal_complement(sp, sub)) == sub

    def test_isotropic_iff_contained(self):
        sp = QuadraticSpace.standard(8)
        iso = Subspace(sp, [sp.basis_vector(1), sp.basis_vector(2)])
        comp = orthogonal_complement(sp, iso)
        assert iso.intersect(comp) == iso

    def test_maximal_isotropic_self_perp_even(self):
        sp = QuadraticSpace.standard(8)
        w = maximal_isotropic(sp)
        assert orthogonal_complement(sp, w) == w


class TestCompleteHyperbolic:
    def test_standard_pairing(self):
        sp = QuadraticSpace.standard(6)
        tup = complete_hyperbolic(sp, [sp.basis_vector(1)])
        tup.validate(sp)
        assert tup.pairs[0][1] == sp.basis_vector(-1)

    def test_mixed_vector(self):
        sp = QuadraticSpace.standard(6)
        v = add(sp.basis_vector(1), sp.basis_vector(2))
        tup = complete_hyperbolic(sp, [v])
        tup.validate(sp)

    def test_full_maximal(self):
        sp = QuadraticSpace.standard(9)
        rng = random.Random(9)
        w = maximal_isotropic(sp)
        tup = complete_hyperbolic(sp, w)
        tup.validate(sp)
        assert len(tup.pairs) == 4
        span = Subspace(sp, tup.rows())
        assert span.dim == 8
        # the orthogonal complement of the tuple supplies the odd vector
        rest = orthogonal_complement(sp, span)
        assert rest.dim == 1
        assert not is_isotropic(sp, rest.rows[0])

    def test_rejects_anisotropic(self):
        sp = QuadraticSpace.standard(6)
        with pytest.raises(ValueError):
            complete_hyperbolic(sp, [add(sp.basis_vector(1), sp.basis_vector(-1))])


class TestCommonHyperbolicBasis:
    def test_equal_spaces(self):
        sp = QuadraticSpace.standard(8)
        w = maximal_isotropic(sp)
        tup, q = common_hyperbolic_basis(sp, w, w)
        assert q == 4
        tup.validate(sp)
        assert Subspace(sp, [a for a, _ in tup.pairs]) == w

    @pytest.mark.parametrize("dim", [4, 5])
    def test_intersection_one(self, dim):
        sp = QuadraticSpace.standard(dim)
        w1 = Subspace(sp, [sp.basis_vector(1), sp.basis_vector(2)])
        w2 = Subspace(sp, [sp.basis_vector(1), sp.basis_vector(-2)])
        tup, q = common_hyperbolic_basis(sp, w1, w2)
        assert q == 1
        tup.validate(sp)
        pos = [a for a, _ in tup.pairs]
        assert Subspace(sp, pos) == w1
        mixed = pos[:q] + [bpart for _, bpart in tup.pairs[q:]]
        assert Subspace(sp, mixed) == w2

    def test_transverse_dim8(self):
        sp = QuadraticSpace.standard(8)
        w1 = Subspace(sp, [sp.basis_vector(i) for i in (1, 2, 3, 4)])
        w2 = Subspace(sp, [sp.basis_vector(-i) for i in (1, 2, 3, 4)])
        tup, q = common_hyperbolic_basis(sp, w1, w2)
        assert q == 0
        tup.validate(sp)
        assert Subspace(sp, [a for a, _ in tup.pairs]) == w1
        assert Subspace(sp, [b for _, b in tup.pairs]) == w2

    def test_random_pairs(self):
        from isograss.cones import random_isotropic_rows

        for dim in (7, 8, 9):
            sp = QuadraticSpace.standard(dim)
            rng = random.Random(f"chb:{dim}")
            for _ in range(5):
                w1 = Subspace(sp, random_isotropic_rows(sp, sp.p, rng))
                w2 = Subspace(sp, random_isotropic_rows(sp, sp.p, rng))
                tup, q = common_hyperbolic_basis(sp, w1, w2)
                tup.validate(sp)
                assert q == w1.intersect(w2).dim
                pos = [a for a, _ in tup.pairs]
                assert Subspace(sp, pos) == w1
                mixed = pos[:q] + [b for _, b in tup.pairs[q:]]
                assert Subspace(sp, mixed) == w2

    def test_rejects_non_maximal(self):
        sp = QuadraticSpace.standard(8)
        small = Subspace(sp, [sp.basis_vector(1)])
        with pytest.raises(ValueError):
            common_hyperbolic_basis(sp, small, maximal_isotropic(sp))


class TestRandomIsotropicVector:
    def test_always_isotropic(self):
        rng = random.Random(1)
        for dim in (5, 6, 7, 8, 11):
            sp = QuadraticSpace.standard(dim)
            for _ in range(50):
                assert is_isotropic(sp, random_isotropic_vector(sp, rng))

    def test_derived_mu_correction(self):
        # x = e1 + e-1, lambda = 1 gives v = e1 + e-1 + e_p - e_-p
        sp = QuadraticSpace.standard(8)
        x = add(sp.basis_vector(1), sp.basis_vector(-1))
        lam = Q(1)
        xx = bilinear(sp, x, x)
        mu = -xx / (2 * lam)
        assert mu == -1
        v = add(x, sp.basis_vector(4), scale(mu, sp.basis_vector(-4)))
        assert is_isotropic(sp, v)

    def test_determinism(self):
        sp = QuadraticSpace.standard(9)
        a = [random_isotropic_vector(sp, random.Random(7)) for _ in range(5)]
        bvecs = [random_isotropic_vector(sp, random.Random(7)) for _ in range(5)]
        assert a == bvecs


class TestWittIndex:
    def test_standard_dims(self):
        assert witt_index(space_from_name("j7")) == 3
        assert witt_index(space_from_name("j8")) == 4
        assert witt_index(QuadraticSpace.standard(2)) == 1

    def test_split_plain_form(self):
        d = QuadraticSpace.from_gram([[1, 0], [0, -1]])
        assert witt_index(d) == 1

    def test_rejects_definite(self):
        with pytest.raises(WittIndexError):
            witt_index(QuadraticSpace.from_gram([[1, 0], [0, 1]]))

    def test_rejects_low_index(self):
        # signature (3, 1): Witt index 1 < floor(4/2)
        g = [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, -1]]
        with pytest.raises(WittIndexError):
            witt_index(QuadraticSpace.from_gram(g))

    def test_plain_split_even(self):
        g = [[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]
        assert witt_index(QuadraticSpace.from_gram(g)) == 2

    def test_degenerate_rejected_at_construction(self):
        with pytest.raises(ValueError):
            QuadraticSpace.from_gram([[1, 0], [0, 0]])
