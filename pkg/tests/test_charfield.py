from fractions import Fraction

import numpy as np
import pytest

from engelkit.charfield import (
    CORRECTED,
    ORACLE,
    PRINTED,
    REFERENCE_FIELDS,
    VARIANTS,
    BracketStructureError,
    assemble_field,
    char_covector,
    char_field,
    coefficients,
    coeffs_corrected,
    coeffs_oracle,
    cross_check,
    horizontality_residuals,
    vanishes_on_sigma,
    _pair_with_covector,
)
from engelkit.distribution import CATALOG, DEGENERATE_MODELS, PfaffianPair, PolyVectorField, frame, lie_bracket
from engelkit.poly import Point4, SparsePoly, random_poly

X = SparsePoly.var("x")
Z = SparsePoly.var("z")
W = SparsePoly.var("w")
ZERO = SparsePoly.zero()

# Frozen coefficient values, verified independently against the bracket
# computation (all three variants coincide on the catalog models because
# none of them has x- or y-dependent mixed partials).
EXPECTED_COEFFS = {
    "engel_std": (ZERO, SparsePoly.const(1)),
    "d224": (-2 * Z, -2 * W),
    "d2334a": (-2 * Z, 2 * W),
    "d2334b": (-2 * W, 2 * Z),
}


@pytest.mark.parametrize("model", list(CATALOG))
@pytest.mark.parametrize("variant", VARIANTS)
def test_catalog_coefficients(model, variant):
    co = coefficients(CATALOG[model], variant)
    c_ref, e_ref = EXPECTED_COEFFS[model]
    assert co.c == c_ref
    assert co.e == e_ref
    assert co.variant == variant


def test_zero_pair_gives_zero_coefficients():
    co = coeffs_corrected(PfaffianPair(ZERO, ZERO))
    assert co.c.is_zero() and co.e.is_zero()


@pytest.mark.parametrize("model", DEGENERATE_MODELS)
def test_oracle_field_matches_reference_closed_form(model):
    assert char_field(CATALOG[model], ORACLE) == REFERENCE_FIELDS[model]


def test_reference_field_values_at_point():
    # d224 characteristic field (2z^2w, 2zw^2, -2z, -2w) at (0,0,1,1)
    fld = char_field(CATALOG["d224"], ORACLE)
    assert tuple(fld.eval(Point4(0, 0, 1, 1))) == (2.0, 2.0, -2.0, -2.0)


def test_engel_std_char_field_proportional_to_w_frame():
    co = coeffs_oracle(CATALOG["engel_std"])
    assert co.c.is_zero()
    _, w_field = frame(CATALOG["engel_std"])
    fld = char_field(CATALOG["engel_std"], ORACLE)
    assert fld == w_field  # e = 1 exactly here


def test_corrected_equals_oracle_on_random_pairs():
    rng = np.random.default_rng(101)
    for _ in range(20):
        pair = PfaffianPair(f=random_poly(rng), g=random_poly(rng))
        c_o = coeffs_oracle(pair)
        c_c = coeffs_corrected(pair)
        assert c_o.c == c_c.c
        assert c_o.e == c_c.e


def test_printed_differs_from_oracle_when_mixed_partials_present():
    # f = z*x has f_zx = 1, so the bare-mixed-partial formula deviates
    pair = PfaffianPair(f=Z * X, g=SparsePoly({(0, 0, 2, 0): Fraction(1, 2)}))
    report = cross_check(pair)
    assert not report.comparison(PRINTED, ORACLE).identical
    assert report.comparison(CORRECTED, ORACLE).identical


def test_cross_check_identical_on_catalog():
    for model, pair in CATALOG.items():
        report = cross_check(pair)
        assert report.comparison(PRINTED, ORACLE).identical, model
        assert report.comparison(CORRECTED, ORACLE).identical, model
        payload = report.to_json_dict(model)
        assert payload["model"] == model
        assert all(entry["identical"] for entry in payload["variant_pairs"])


def test_covector_annihilates_first_bracket():
    rng = np.random.default_rng(7)
    for _ in range(15):
        pair = PfaffianPair(f=random_poly(rng), g=random_poly(rng))
        z_field, w_field = frame(pair)
        b = lie_bracket(z_field, w_field)
        cov = char_covector(pair)
        assert (cov.lambda1 * b.cx + cov.lambda2 * b.cy).is_zero()


def test_e_is_shared_by_all_variants():
    rng = np.random.default_rng(13)
    for _ in range(10):
        pair = PfaffianPair(f=random_poly(rng), g=random_poly(rng))
        es = {v: coefficients(pair, v).e for v in VARIANTS}
        assert es[PRINTED] == es[CORRECTED] == es[ORACLE]


def test_variants_define_the_same_line_field():
    rng = np.random.default_rng(17)
    for _ in range(10):
        pair = PfaffianPair(f=random_poly(rng), g=random_poly(rng))
        c_o = coeffs_oracle(pair)
        c_c = coeffs_corrected(pair)
        det = c_o.c * c_c.e - c_o.e * c_c.c
        assert det.is_zero()


@pytest.mark.parametrize("model", list(CATALOG))
@pytest.mark.parametrize("variant", VARIANTS)
def test_horizontality_exact(model, variant):
    pair = CATALOG[model]
    r1, r2 = horizontality_residuals(pair, char_field(pair, variant))
    assert r1.is_zero() and r2.is_zero()


def test_horizontality_on_random_pairs():
    rng = np.random.default_rng(23)
    for _ in range(10):
        pair = PfaffianPair(f=random_poly(rng), g=random_poly(rng))
        r1, r2 = horizontality_residuals(pair, char_field(pair, ORACLE))
        assert r1.is_zero() and r2.is_zero()


@pytest.mark.parametrize("model", DEGENERATE_MODELS)
def test_char_field_vanishes_on_degeneration_surface(model):
    assert vanishes_on_sigma(char_field(CATALOG[model], ORACLE))


def test_engel_std_char_field_does_not_vanish_on_surface():
    assert not vanishes_on_sigma(char_field(CATALOG["engel_std"], ORACLE))


def test_pairing_guard_rejects_fields_with_z_or_w_components():
    cov = char_covector(CATALOG["d224"])
    bad = PolyVectorField(ZERO, ZERO, SparsePoly.const(1), ZERO)
    with pytest.raises(BracketStructureError):
        _pair_with_covector(cov, bad)


def test_assemble_field_components():
    pair = CATALOG["d2334a"]
    co = coeffs_oracle(pair)
    fld = assemble_field(pair, co)
    assert fld.cx == -co.e * pair.f
    assert fld.cy == -co.e * pair.g
    assert fld.cz == co.c
    assert fld.cw == co.e


def test_unknown_variant_rejected():
    with pytest.raises(ValueError):
        coefficients(CATALOG["d224"], "bogus")
