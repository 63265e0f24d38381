import json
import math

import numpy as np
import pytest

from fracwave import verify
from fracwave.errors import ValidationError
from fracwave.verify import (
    CheckReport,
    HarnessConfig,
    aligned_radius,
    growth_slope,
    kernel_bumps,
    limit_distances,
    run_backend_compare,
    run_bound_suite,
    run_dtn_recovery,
    run_initial_data,
    run_limit_study,
    run_pde_residual,
    run_propagation_checks,
    run_suite,
    run_symbol_checks,
    suite_jobs,
    summary_table,
    write_report,
)


@pytest.fixture
def quick():
    return HarnessConfig.for_suite("quick")


def _failures(reports):
    return [(r.name, r.parameters, r.metric, r.tolerance) for r in reports if not r.passed]


class TestCheckReport:
    """Test report records."""

    def test_passed_compares_metric_and_tolerance(self):
        """A report passes when its metric does not exceed the tolerance."""
        assert CheckReport("a", {}, 1e-9, 1e-8).passed
        assert CheckReport("a", {}, 0.0, 0.0).passed
        assert not CheckReport("a", {}, 2e-8, 1e-8).passed
        assert not CheckReport("a", {}, math.nan, 1.0).passed

    def test_sort_key_orders_by_name_then_parameters(self):
        """Reports sort by name, then by their parameters."""
        reports = [CheckReport("b", {"x": 1}, 0, 1), CheckReport("a", {"x": 2}, 0, 1), CheckReport("a", {"x": 1}, 0, 1)]
        ordered = sorted(reports, key=CheckReport.sort_key)
        assert [(r.name, r.parameters["x"]) for r in ordered] == [("a", 1), ("a", 2), ("b", 1)]

    def test_to_dict_carries_status(self):
        """The serialized report includes the pass flag."""
        data = CheckReport("a", {"d": 1}, 0.5, 1.0, runtime=0.1, seed=3).to_dict()
        assert data["passed"] is True
        assert data["seed"] == 3


class TestHarnessConfig:
    """Test suite configuration."""

    def test_quick_draws_fewer_samples(self):
        """The quick suite uses four draws, acceptance twenty."""
        assert HarnessConfig.for_suite("quick").draws == 4
        assert HarnessConfig.for_suite("acceptance").draws == 20

    def test_unknown_suite(self):
        """Only the quick and acceptance suites exist."""
        with pytest.raises(ValidationError, match="suite"):
            HarnessConfig.for_suite("nightly")

    def test_grids(self):
        """Refinement multiplies the grid size."""
        config = HarnessConfig()
        assert config.grid(1, refine=2).n == 2 * config.grid_n[1]
        assert config.kernel_grid(2).box_length == config.kernel_box


class TestSuites:
    """Test job lists and report merging."""

    def test_acceptance_adds_limits_and_classical(self, quick):
        """Acceptance runs the quick jobs plus three limit studies and the classical checks."""
        assert len(suite_jobs("acceptance", quick)) == len(suite_jobs("quick", quick)) + 4

    def test_run_suite_merges_sorted(self, monkeypatch, quick):
        """Reports from all jobs come back in a deterministic order."""
        jobs = [
            lambda: [CheckReport("z", {}, 0.0, 1.0)],
            lambda: [CheckReport("a", {"k": 2}, 0.0, 1.0), CheckReport("a", {"k": 1}, 0.0, 1.0)],
        ]
        monkeypatch.setattr(verify, "suite_jobs", lambda suite, config: jobs)
        reports = run_suite("quick", quick, threads=2)
        assert [(r.name, r.parameters.get("k")) for r in reports] == [("a", 1), ("a", 2), ("z", None)]

    def test_report_file(self, tmp_path):
        """The JSON report lists every check."""
        path = write_report(tmp_path / "report.json", [CheckReport("a", {"d": 1}, 0.1, 1.0)])
        data = json.loads(path.read_text())
        assert data[0]["name"] == "a"
        assert data[0]["passed"] is True

    def test_summary_table_tallies(self):
        """The table has one row per report and a tally per check."""
        reports = [
            CheckReport("wave-group", {"t": 1.0}, 1e-10, 1e-8),
            CheckReport("wave-group", {"t": 5.0}, 1e-6, 1e-8),
            CheckReport("dtn-recovery", {"d": 1, "t_sequence": [0.1]}, 1e-6, 1e-4),
        ]
        table = summary_table(reports)
        assert "wave-group: 1/2 passed" in table
        assert "dtn-recovery: 1/1 passed" in table
        assert "FAIL" in table
        assert "t_sequence" not in table


class TestBoundHelpers:
    """Test the helpers behind the empirical bounds."""

    @pytest.mark.parametrize("radius,amplitude", [(100.0, 0.5), (1000.0, 5.0), (37.0, 0.0)])
    def test_aligned_radius(self, radius, amplitude):
        """The aligned radius is at least the request and lands on a full turn."""
        aligned = aligned_radius(radius, amplitude)
        turns = (aligned + amplitude**2 / aligned) / (2.0 * math.pi)
        assert aligned >= radius
        assert aligned - radius < 2.0 * math.pi + 1e-9
        assert turns == pytest.approx(round(turns), abs=1e-9)

    def test_growth_slope(self):
        """The symbol's second-order part grows like λ^{σ/2+3/4}."""
        assert abs(growth_slope(0.7, np.logspace(2, 4, 9)) - 1.1) < 0.05


class TestChecks:
    """Run the quick variants of each check family."""

    def test_symbol_checks(self, quick):
        """Symbol identities hold."""
        reports = run_symbol_checks(quick)
        assert {r.name for r in reports} >= {"gamma-oscillatory", "wave-group", "circle-closure", "symbol-ode"}
        assert _failures(reports) == []

    def test_dtn_recovery(self, quick):
        """The DtN map recovers the fractional Laplacian."""
        assert _failures(run_dtn_recovery(quick)) == []

    def test_backend_compare(self, quick):
        """Spectral backends agree with each other and with the kernels."""
        reports = run_backend_compare(quick)
        pairs = {r.parameters["pair"] for r in reports}
        assert pairs == {"bessel/subordination", "bessel/kernel"}
        assert _failures(reports) == []

    def test_pde_residual(self, quick):
        """Solutions satisfy the extension equation to second order."""
        assert _failures(run_pde_residual(quick)) == []

    def test_initial_data(self, quick):
        """Both traces are recovered as t → 0."""
        assert _failures(run_initial_data(quick)) == []

    def test_propagation(self, quick):
        """Kernels vanish outside the light cone and Klein–Gordon leakage is tiny."""
        reports = run_propagation_checks(quick)
        support = [r for r in reports if r.name == "kernel-support"]
        assert all(r.metric == 0.0 for r in support)
        assert _failures(reports) == []

    def test_bounds(self, quick):
        """The quick bound checks report a fitted constant and pass."""
        reports = run_bound_suite(quick)
        names = {r.name for r in reports}
        assert names == {"bound-truncated", "bound-divergence", "bound-growth-slope"}
        truncated = [r for r in reports if r.name == "bound-truncated"]
        assert all(math.isfinite(r.parameters["fitted_constant"]) for r in truncated)
        assert _failures(reports) == []


class TestLimitStudy:
    """Test kernel solutions approaching the surface mean."""

    def test_three_dimensions(self):
        """σ → 1/2 in d = 3 converges monotonically to the spherical mean."""
        reports = run_limit_study(3)
        assert {r.name for r in reports} == {"limit-monotone", "limit-final"}
        assert _failures(reports) == []

    def test_two_dimensions(self):
        """σ → 0 in d = 2 converges monotonically to the circular mean."""
        reports = run_limit_study(2)
        assert {r.name for r in reports} == {"limit-monotone", "limit-final"}
        assert _failures(reports) == []

    def test_four_dimensions(self):
        """σ → 1 in d = 4 converges monotonically to the spherical mean."""
        reports = run_limit_study(4)
        assert {r.name for r in reports} == {"limit-monotone", "limit-final"}
        assert _failures(reports) == []

    def test_distances_shrink(self):
        """The distance at σ = 0.499 is far below the one at 0.4."""
        far, near = limit_distances(3, (0.4, 0.499))
        assert near < 0.1 * far

    def test_unsupported_dimension(self):
        """Limit studies exist for d = 2, 3, 4 only."""
        with pytest.raises(ValidationError):
            run_limit_study(5)

    def test_kernel_bumps_shape(self):
        """The shared kernel data has two bumps in the requested dimension."""
        assert kernel_bumps(3).d == 3
