import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from heston_xpand.model import (
    DomainError,
    FellerViolation,
    HestonParams,
    Method,
    OptionSpec,
    PriceResult,
    dump_params,
    load_params,
    params_from_mapping,
    validate_params,
)

FIG4 = dict(kappa=1.5, theta=0.2, nu=0.5, rho=-0.8, v0=0.25, r=0.001, s0=100.0)


def test_figure_parameters_are_valid():
    p = HestonParams(**FIG4)
    assert validate_params(p) is p
    assert p.feller_ratio == pytest.approx(0.6 / 0.25)


def test_feller_violation():
    with pytest.raises(FellerViolation) as err:
        HestonParams(**{**FIG4, "nu": 0.8})
    assert err.value.field == "nu"


def test_feller_boundary_is_admissible():
    nu = math.sqrt(2 * 1.5 * 0.2)
    assert HestonParams(**{**FIG4, "nu": nu}).nu == nu


@pytest.mark.parametrize(
    "field,value",
    [("rho", 1.0), ("rho", -1.0), ("kappa", 0.0), ("theta", -0.1), ("nu", 0.0), ("v0", 0.0),
     ("s0", -5.0), ("r", -0.01), ("kappa", float("nan")), ("s0", float("inf"))],
)
def test_domain_errors_name_the_field(field, value):
    with pytest.raises(DomainError) as err:
        HestonParams(**{**FIG4, field: value})
    assert err.value.field == field
    assert field in str(err.value)


@given(
    kappa=st.floats(0.1, 5.0),
    theta=st.floats(0.01, 1.0),
    frac=st.floats(0.01, 1.0),
    rho=st.floats(-0.99, 0.99),
    v0=st.floats(0.01, 1.0),
)
def test_validate_is_idempotent(kappa, theta, frac, rho, v0):
    p = HestonParams(kappa, theta, frac * math.sqrt(2 * kappa * theta), rho, v0, 0.01, 100.0)
    assert validate_params(validate_params(p)) == p


def test_json_roundtrip(tmp_path):
    p = HestonParams(**FIG4)
    path = tmp_path / "p.json"
    dump_params(p, path)
    assert load_params(path) == p


def test_unknown_and_missing_keys_rejected(tmp_path):
    with pytest.raises(DomainError, match="sigma"):
        params_from_mapping({**FIG4, "sigma": 0.2})
    with pytest.raises(DomainError, match="s0"):
        params_from_mapping({k: v for k, v in FIG4.items() if k != "s0"})
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps([1, 2]))
    with pytest.raises(DomainError):
        load_params(bad)


def test_option_spec():
    spec = OptionSpec(strike=90.0, maturity=2.0, t=0.5)
    assert spec.tau == 1.5
    assert spec.moneyness(100.0) == 0.9
    with pytest.raises(DomainError, match="maturity"):
        OptionSpec(100.0, 1.0, t=1.0)
    with pytest.raises(DomainError, match="strike"):
        OptionSpec(0.0, 1.0)


def test_price_result_bounds():
    p = HestonParams(**FIG4)
    spec = OptionSpec(100.0, 1.0)
    assert PriceResult(10.0, Method.REF_FOURIER).within_call_bounds(p, spec)
    assert not PriceResult(101.0, Method.REF_FOURIER).within_call_bounds(p, spec)
    assert not PriceResult(-1.0, Method.APPROX_O2).within_call_bounds(p, spec)
