import json
import math

import numpy as np
import pytest

from qlandscape import losses, models, qsim, verify
from qlandscape.rng import XorShift64Star


def test_closed_form_helper_edges():
    assert verify.toy_closed_form_loss(np.zeros(4))[0] == 0.0
    assert verify.toy_closed_form_loss(np.full(3, np.pi))[0] == pytest.approx(1.0)


def test_toy_closed_form_oracle_passes():
    report = verify.oracle_toy_closed_form(6, trials=100, seed=1)
    assert report.passed
    assert report.max_error < 1e-10
    assert report.line().startswith("[PASS] toy_closed_form[N=6]")


def test_toy_closed_form_oracle_range():
    with pytest.raises(ValueError):
        verify.oracle_toy_closed_form(11)


def test_shift_vs_fd_small_circuits():
    g, h = verify.oracle_shift_vs_fd(models.build_toy(3), trials=5, seed=2)
    assert g.passed and h.passed
    g, h = verify.oracle_shift_vs_fd(models.build_reuploading(2, 1), trials=3, seed=2)
    assert g.passed and h.passed


def test_fd_hessian_on_quadratic():
    a = np.array([[2.0, 0.5, 0.0], [0.5, 1.0, -0.3], [0.0, -0.3, 4.0]])
    f = lambda rows: 0.5 * np.einsum("bi,ij,bj->b", rows, a, rows)
    np.testing.assert_allclose(verify.fd_hessian_from_values(f, np.array([0.1, -0.2, 0.3]), 1e-3), a,
                               atol=1e-7)


def test_oracle_detects_a_wrong_answer():
    # a deliberately broken objective must fail the Hessian oracle
    class Broken:
        def __init__(self, inner):
            self.inner = inner

        def losses(self, rows):
            return self.inner.losses(rows)

        def hessian(self, params):
            gh = self.inner.hessian(params)
            return type(gh)(gh.value, gh.gradient, gh.hessian * 1.01, gh.eval_count)

    circuit = models.build_toy(2)
    inner = verify.shiftcalc.CircuitObjective(circuit, losses.GlobalFidelity(qsim.StateVector.zero(2)))
    bad = Broken(inner)
    params = np.array([0.3, 1.1])
    err = np.max(np.abs(bad.hessian(params).hessian - verify.fd_hessian_from_values(bad.losses, params)))
    assert err > verify.HESS_TOL


def test_analytic_variance_values():
    assert verify.analytic_toy_gradient_variance(2) == pytest.approx(3 / 64)
    assert verify.analytic_toy_gradient_variance(8) / verify.analytic_toy_gradient_variance(2) == \
        pytest.approx(0.375**6)


def test_sample_variance_close_to_analytic_for_large_sample():
    v = verify.sample_toy_gradient_variance(1, 2000, XorShift64Star(5))
    assert v == pytest.approx(0.125, rel=0.1)


def test_variance_scaling_oracle():
    report, info = verify.oracle_variance_scaling(seed=0)
    assert report.passed, report.line()
    assert info["slope"] < math.log(0.5)
    assert info["monotone"]


def test_report_line_format():
    r = verify.OracleReport("x", 2e-3, 1e-3, False, "note")
    assert r.line() == "[FAIL] x: max error 2.000e-03 (tolerance 1.0e-03) note"


def test_main_prints_json(monkeypatch, capsys):
    monkeypatch.setattr(verify, "run_all", lambda seed, trials: [verify.oracle_toy_closed_form(2, 5, seed)])
    assert verify.main(["--seed", "1"]) == 0
    out = capsys.readouterr().out
    lines = out.splitlines()
    assert lines[0].startswith("[PASS]")
    summary = json.loads("\n".join(lines[1:]))
    assert summary["passed"] is True
    assert summary["reports"][0]["name"] == "toy_closed_form[N=2]"


def test_main_exit_code_on_failure(monkeypatch, capsys):
    monkeypatch.setattr(verify, "run_all",
                        lambda seed, trials: [verify.OracleReport("bad", 1.0, 0.1, False)])
    assert verify.main([]) == 1
