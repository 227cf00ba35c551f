import numpy as np
import pytest

from eduvuln import intervention, risk
from eduvuln.errors import ConfigError
from eduvuln.intervention import (
    InterventionDelta,
    apply_delta,
    batch_plan,
    minimal_intervention,
    whatif,
)
from eduvuln.risk import VulnerabilityLevel

from conftest import logistic_only_bundle, make_row


@pytest.fixture
def boundary_bundle():
    """At-risk probability decided by internet alone: eta = 5 - 0.5*internet,
    so the logistic vote flips exactly at internet = 10."""
    return logistic_only_bundle(("internet", "computer"), [5.0, -0.5, 0.0])


class TestApplyDelta:
    def test_zero_delta_is_identity(self, trained_bundle, planted_rows):
        row = planted_rows[0]
        baseline = risk.assess(trained_bundle, [row])[0]
        hypothetical = whatif(trained_bundle, row, InterventionDelta())
        assert hypothetical == baseline

    def test_original_row_untouched(self):
        row = make_row(internet=20.0)
        apply_delta(row, InterventionDelta(d_internet=30.0))
        assert row.internet_pct == 20.0

    def test_percentages_clamp_at_100(self):
        row = make_row(internet=95.0, computer=99.5)
        out = apply_delta(row, InterventionDelta(d_internet=20.0, d_computer=20.0))
        assert out.internet_pct == 100.0 and out.computer_pct == 100.0

    def test_connectivity_adds_subscribers_per_population(self):
        row = make_row(population=10_000, connectivity=15.0)
        out = apply_delta(row, InterventionDelta(d_connectivity_subscribers=144))
        assert out.connectivity == pytest.approx(15.0 + 1000.0 * 144 / 10_000)

    def test_negative_delta_rejected(self):
        with pytest.raises(ConfigError):
            InterventionDelta(d_internet=-1.0)

    def test_clamp_property_random(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            row = make_row(internet=float(rng.uniform(0, 100)),
                           computer=float(rng.uniform(0, 100)))
            delta = InterventionDelta(d_internet=float(rng.uniform(0, 200)),
                                      d_computer=float(rng.uniform(0, 200)))
            out = apply_delta(row, delta)
            assert 0.0 <= out.internet_pct <= 100.0
            assert 0.0 <= out.computer_pct <= 100.0
            assert out.connectivity >= 0.0


class TestMinimalIntervention:
    def test_baseline_already_at_target(self, boundary_bundle):
        row = make_row(internet=50.0)  # eta = -20, prob ~ 0: no votes
        res = minimal_intervention(boundary_bundle, row, "internet",
                                   VulnerabilityLevel.NONE)
        assert res.achieved
        assert res.delta.d_internet == 0.0
        assert len(res.search_trace) == 1

    def test_unreachable_target_reports_best(self):
        # logistic always votes at-risk regardless of the knob
        bundle = logistic_only_bundle(("internet", "computer"), [50.0, 0.0, 0.0])
        row = make_row(internet=5.0)
        res = minimal_intervention(bundle, row, "internet", VulnerabilityLevel.NONE,
                                   step=10.0, max_delta=50.0)
        assert not res.achieved
        assert res.new_level == VulnerabilityLevel.LOW
        assert len(res.search_trace) == 6

    def test_closed_form_boundary_inversion(self, boundary_bundle):
        rng = np.random.default_rng(1)
        step = 0.25
        for _ in range(20):
            internet0 = float(rng.uniform(0.0, 9.0))
            row = make_row(internet=internet0)
            delta_star = 10.0 - internet0  # eta hits exactly 0 here
            res = minimal_intervention(boundary_bundle, row, "internet",
                                       VulnerabilityLevel.NONE, step=step,
                                       max_delta=60.0)
            assert res.achieved
            found = res.delta.d_internet
            # first grid point strictly past the boundary (prob 0.5 still votes)
            assert found > delta_star - 1e-9
            assert found - delta_star <= step + 1e-9

    def test_trace_is_strictly_increasing_and_pure(self, boundary_bundle):
        row = make_row(internet=2.0)
        res = minimal_intervention(boundary_bundle, row, "internet",
                                   VulnerabilityLevel.NONE, step=2.5, max_delta=30.0)
        deltas = [d for d, _ in res.search_trace]
        assert deltas == sorted(set(deltas))
        for d, level in res.search_trace:
            again = whatif(boundary_bundle, row,
                           InterventionDelta.for_knob("internet", d))
            assert again.level == level

    def test_reproducible_from_serialized_bundle(self, trained_bundle, planted_rows,
                                                 tmp_path):
        path = tmp_path / "bundle.json"
        risk.save_bundle(trained_bundle, path)
        back = risk.load_bundle(path)
        row = planted_rows[3]
        a = minimal_intervention(trained_bundle, row, "internet",
                                 VulnerabilityLevel.NONE, step=5.0, max_delta=50.0)
        b = minimal_intervention(back, row, "internet",
                                 VulnerabilityLevel.NONE, step=5.0, max_delta=50.0)
        assert a.to_dict() == b.to_dict()

    def test_bad_knob_rejected(self, boundary_bundle):
        with pytest.raises(ConfigError, match="knob"):
            minimal_intervention(boundary_bundle, make_row(), "ethnic",
                                 VulnerabilityLevel.NONE)

    def test_bad_step_rejected(self, boundary_bundle):
        with pytest.raises(ConfigError):
            minimal_intervention(boundary_bundle, make_row(), "internet",
                                 VulnerabilityLevel.NONE, step=0.0)
        with pytest.raises(ConfigError):
            minimal_intervention(boundary_bundle, make_row(), "internet",
                                 VulnerabilityLevel.NONE, step=5.0, max_delta=1.0)

    def test_connectivity_knob_in_subscribers(self):
        # eta = 2 - 0.2*connectivity: flips at connectivity = 10
        bundle = logistic_only_bundle(("connectivity",), [2.0, -0.2])
        row = make_row(connectivity=0.0, population=1_000)
        res = minimal_intervention(bundle, row, "connectivity",
                                   VulnerabilityLevel.NONE, step=1.0, max_delta=100.0)
        # 1 subscriber per 1000 inhabitants = +1 connectivity;
        # boundary at 10 subscribers, vote flips strictly past it
        assert res.achieved and res.delta.d_connectivity_subscribers == 11.0


class TestWhatifState:
    def test_state_wide_delta_resummarizes(self):
        # every municipality at risk via internet; +30pp flips them all
        bundle = logistic_only_bundle(("internet", "computer"), [5.0, -0.5, 0.0])
        rows = [make_row(code=c, internet=5.0, state=4) for c in (1, 2, 3)]
        rows.append(make_row(code=9, internet=5.0, state=8))
        _, before = intervention.whatif_state(bundle, rows, 4,
                                              InterventionDelta())
        assert before.fractions["Low"] == 1.0
        assessments, after = intervention.whatif_state(
            bundle, rows, 4, InterventionDelta(d_internet=30.0))
        assert len(assessments) == 3
        assert after.fractions["None"] == 1.0

    def test_unknown_state_is_error(self, trained_bundle):
        with pytest.raises(ConfigError):
            intervention.whatif_state(trained_bundle, [make_row(state=1)], 99,
                                      InterventionDelta())


class TestBatchPlan:
    def test_singleton_matches_minimal(self, boundary_bundle):
        row = make_row(internet=4.0)
        (planned,) = batch_plan(boundary_bundle, [row], "internet",
                                VulnerabilityLevel.NONE, step=1.0, max_delta=20.0)
        solo = minimal_intervention(boundary_bundle, row, "internet",
                                    VulnerabilityLevel.NONE, step=1.0, max_delta=20.0)
        assert planned.to_dict() == solo.to_dict()

    def test_smaller_delta_sorts_first(self, boundary_bundle):
        near = make_row(code=2, internet=9.0)
        far = make_row(code=1, internet=1.0)
        out = batch_plan(boundary_bundle, [far, near], "internet",
                         VulnerabilityLevel.NONE, step=1.0, max_delta=30.0)
        assert [r.code for r in out] == [2, 1]

    def test_achieved_before_unachieved_then_code(self):
        bundle = logistic_only_bundle(("internet", "computer"), [50.0, 0.0, 0.0])
        reachable = logistic_only_bundle(("internet", "computer"), [5.0, -0.5, 0.0])
        rows = [make_row(code=c, internet=5.0) for c in (3, 1, 2)]
        out = batch_plan(bundle, rows, "internet", VulnerabilityLevel.NONE,
                         step=10.0, max_delta=30.0)
        assert all(not r.achieved for r in out)
        assert [r.code for r in out] == [1, 2, 3]
        out2 = batch_plan(reachable, rows, "internet", VulnerabilityLevel.NONE,
                          step=10.0, max_delta=30.0)
        assert all(r.achieved for r in out2)

    def test_ordering_matches_recomputation(self, trained_bundle, planted_rows):
        rows = [r for r in planted_rows if r.year == 2019][:50]
        out = batch_plan(trained_bundle, rows, "internet", VulnerabilityLevel.LOW,
                         step=10.0, max_delta=40.0)
        assert len(out) == 50
        recomputed = [minimal_intervention(trained_bundle, r, "internet",
                                           VulnerabilityLevel.LOW, step=10.0,
                                           max_delta=40.0)
                      for r in rows]
        recomputed.sort(key=lambda r: (not r.achieved, r.delta.d_internet, r.code))
        assert [r.to_dict() for r in out] == [r.to_dict() for r in recomputed]
