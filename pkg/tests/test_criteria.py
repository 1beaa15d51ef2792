import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from trimem.config import ExperimentSpec
from trimem.criteria import (BracketError, CriterionResult, GainTriple, closed_form_I,
                             closed_form_objective, criterion_value, evaluate_criteria,
                             numeric_optimal_gain, optimal_gain, pipeline_criteria,
                             state_objective, state_optimal_gains, table1_report, to_dB)
from trimem.gaussian import vacuum_state
from trimem.network import Stage, build_input_state, run_pipeline

from conftest import ETA_M, ETA_READ, R_REF

squeeze = st.floats(0.0, 1.2)
eff = st.floats(0.0, 1.0)


def test_vacuum_is_the_bound():
    res = evaluate_criteria(vacuum_state(3), GainTriple.uniform(0.0))
    assert res.values == (1.0, 1.0, 1.0)
    assert not res.entangled


def test_input_optimum_values():
    g = optimal_gain("input", R_REF)
    assert g == pytest.approx(0.7042718053, abs=1e-10)
    assert closed_form_I("input", R_REF, 1.0, g) == pytest.approx(0.5500074967, abs=1e-10)


def test_atomic_optimum_values():
    g = optimal_gain("atomic", R_REF, ETA_M)
    assert g == pytest.approx(0.2259459, abs=1e-7)
    assert closed_form_I("atomic", R_REF, ETA_M, g) == pytest.approx(0.9271337, abs=1e-7)


@pytest.mark.parametrize("eta,g_ref,i_ref", [
    (0.156, 0.159295, 0.953473),
    (ETA_M * ETA_READ, 0.159670, 0.953337),
    (0.16, 0.163032, 0.952113),
])
def test_released_headline(eta, g_ref, i_ref):
    g = optimal_gain("released", R_REF, eta)
    assert g == pytest.approx(g_ref, abs=2e-6)
    assert closed_form_I("released", R_REF, eta, g) == pytest.approx(i_ref, abs=2e-6)


def test_closed_form_vacuum_term_is_quadratic_in_gain():
    # with no signal left the value is the vacuum's Var(gP1+P2+P3)/2 + Var(X2-X3)/2
    for g in (-1.0, 0.0, 0.5, 2.0):
        assert closed_form_I("released", 0.7, 0.0, g) == pytest.approx(1 + g * g / 4)


@given(squeeze, eff, st.floats(-1.5, 2.5))
def test_closed_form_matches_engine(r, eta, g):
    spec = ExperimentSpec.symmetric(r, eta)
    atomic = run_pipeline(spec)[1].state
    for k in range(3):
        assert criterion_value(atomic, k, g) == pytest.approx(closed_form_I("atomic", r, eta, g),
                                                              abs=1e-10)


@given(squeeze, eff)
def test_analytic_gain_matches_state_gain(r, eta):
    state = run_pipeline(ExperimentSpec.symmetric(r, 1.0, eta))[2].state
    gains = state_optimal_gains(state)
    assert all(g == pytest.approx(optimal_gain("released", r, eta), abs=1e-10) for g in gains)


@given(squeeze, st.floats(0.01, 1.0))
def test_numeric_optimizer_agrees(r, eta):
    g_num = numeric_optimal_gain(closed_form_objective("released", r, eta))
    assert g_num == pytest.approx(optimal_gain("released", r, eta), abs=1e-9)


@given(squeeze, st.floats(0.01, 1.0), st.floats(-0.5, 0.5))
def test_optimal_gain_is_a_minimum(r, eta, dg):
    g = optimal_gain("released", r, eta)
    assert closed_form_I("released", r, eta, g) <= closed_form_I("released", r, eta, g + dg) + 1e-14


def test_numeric_optimizer_expands_bracket():
    assert numeric_optimal_gain(lambda g: (g - 17.5) ** 2) == pytest.approx(17.5, abs=1e-9)


def test_numeric_optimizer_reports_failure():
    with pytest.raises(BracketError):
        numeric_optimal_gain(lambda g: -g, max_expand=5)


def test_state_objective_on_input_state():
    s = build_input_state(R_REF)
    g = numeric_optimal_gain(state_objective(s, 1))
    assert g == pytest.approx(optimal_gain("input", R_REF), abs=1e-9)


@given(squeeze)
def test_full_efficiency_reduces_to_input(r):
    g_in = optimal_gain("input", r)
    assert optimal_gain("released", r, 1.0) == pytest.approx(g_in, abs=1e-12)
    assert closed_form_I("released", r, 1.0, g_in) == pytest.approx(closed_form_I("input", r, 1.0, g_in),
                                                                    abs=1e-12)


@given(squeeze)
def test_zero_efficiency_is_vacuum(r):
    assert optimal_gain("released", r, 0.0) == 0.0
    assert closed_form_I("released", r, 0.0, 0.0) == 1.0


def test_input_stage_rejects_loss():
    with pytest.raises(ValueError):
        closed_form_I("input", 0.3, 0.5, 0.1)
    with pytest.raises(ValueError):
        optimal_gain("atomic", 0.3, 1.2)


def test_vectorised_forms():
    r = np.linspace(0, 1, 5)[:, None]
    eta = np.linspace(0, 1, 4)[None, :]
    g = optimal_gain("released", r, eta)
    assert g.shape == (5, 4)
    assert closed_form_I("released", r, eta, g).shape == (5, 4)


def test_result_semantics():
    res = CriterionResult(0.9, 1.1, 0.95, GainTriple(0.1, 0.2, 0.3), Stage.ATOMIC)
    assert res.entangled
    assert res.I == 0.95
    d = json.loads(json.dumps(res.to_dict()))
    assert d["stage"] == "atomic" and d["gains"] == [0.1, 0.2, 0.3]
    assert not CriterionResult(0.9, 1.1, 1.0, GainTriple.uniform(0)).entangled


def test_gain_triple_validation():
    with pytest.raises(ValueError):
        GainTriple(0.1, float("nan"), 0.0)


def test_to_db():
    assert to_dB(0.5, 1.0) == pytest.approx(-3.0103, abs=1e-4)
    with pytest.raises(ValueError):
        to_dB(0.0, 1.0)


def test_pipeline_criteria_reference_point(ref_spec):
    res = pipeline_criteria(ref_spec)
    assert res.entangled
    assert res.I == pytest.approx(0.953337, abs=2e-6)
    assert res.values == pytest.approx((res.I,) * 3, abs=1e-12)


def test_table_rows_at_reference_point(ref_spec):
    rows = table1_report(ref_spec)
    assert rows[0].input_dB == pytest.approx(-3.3006, abs=1e-4)
    assert rows[1].input_dB == pytest.approx(-2.9526, abs=1e-4)
    assert rows[0].atomic_dB == pytest.approx(-0.5672, abs=1e-4)
    assert rows[1].atomic_dB == pytest.approx(-0.1463, abs=1e-4)
    assert rows[0].released_dB == pytest.approx(-0.3775, abs=1e-4)
    assert rows[1].released_dB == pytest.approx(-0.0990, abs=1e-4)
    optimal = table1_report(ref_spec, atomic_gains="optimal")
    assert optimal[1].atomic_dB == pytest.approx(-0.2118, abs=1e-4)
    assert optimal[1].atomic_dB < rows[1].atomic_dB


def test_symmetric_rows_repeat(ref_spec):
    rows = table1_report(ref_spec)
    for n in (2, 4):
        assert rows[n].released_dB == pytest.approx(rows[0].released_dB, abs=1e-12)
        assert rows[n + 1].released_dB == pytest.approx(rows[1].released_dB, abs=1e-12)
