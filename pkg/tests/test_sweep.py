import pytest

from nfvalloc.model import DomainError
from nfvalloc.scenarios import MiningScenarioParams, NfvScenarioParams
from nfvalloc.sweep import AGG_HEADER, CSV_HEADER, run_sweep


def small_base(seed=0):
    return NfvScenarioParams(n_servers=5, n_sfcs=2, n_access=1, n_transport=1,
                             vnf_count_range=(1, 2), link_density=0.6, seed=seed)


class TestRowContract:
    def test_row_counts(self):
        detail, agg = run_sweep(small_base(), "n_servers", [4, 5, 6],
                                solvers=["hura"], snapshots=5)
        dlines = detail.strip().splitlines()
        alines = agg.strip().splitlines()
        assert dlines[0] == CSV_HEADER
        assert alines[0] == AGG_HEADER
        assert len(dlines) == 1 + 3 * 5 * 1
        assert len(alines) == 1 + 3

    def test_multiple_solvers_multiply_rows(self):
        detail, _ = run_sweep(small_base(), "n_sfcs", [1, 2],
                              solvers=["hura", "ara"], snapshots=2)
        assert len(detail.strip().splitlines()) == 1 + 2 * 2 * 2

    def test_mining_axis_routes_to_mo(self):
        base = MiningScenarioParams(n_miners=2, seed=0)
        detail, agg = run_sweep(base, "n_miners", [1, 2], snapshots=3)
        lines = detail.strip().splitlines()
        assert len(lines) == 1 + 2 * 3
        assert all(line.split(",")[2] == "mo" for line in lines[1:])

    def test_unknown_axis_rejected(self):
        with pytest.raises(DomainError):
            run_sweep(small_base(), "does_not_exist", [1], snapshots=1)

    def test_scalar_pins_range_fields(self):
        detail, _ = run_sweep(small_base(), "vnf_count_range", [1, 2],
                              solvers=["hura"], snapshots=2)
        assert len(detail.strip().splitlines()) == 1 + 4

    def test_deterministic_without_timing(self):
        d1, a1 = run_sweep(small_base(), "n_servers", [4, 5], solvers=["hura"],
                           snapshots=3)
        d2, a2 = run_sweep(small_base(), "n_servers", [4, 5], solvers=["hura"],
                           snapshots=3)
        assert d1 == d2 and a1 == a2

    def test_timing_flag_populates_runtime(self):
        detail, _ = run_sweep(small_base(), "n_servers", [4], solvers=["hura"],
                              snapshots=1, timing=True)
        runtime = detail.strip().splitlines()[1].split(",")[8]
        assert float(runtime) > 0.0

    def test_timing_off_zeroes_runtime(self):
        detail, _ = run_sweep(small_base(), "n_servers", [4], solvers=["hura"],
                              snapshots=1)
        assert detail.strip().splitlines()[1].split(",")[8] == "0"
