import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iabslice.env import SlicingEnv, Split
from iabslice.errors import DomainError, GenerationError, ProfileParseError
from iabslice.harness import oracle_max_reward
from iabslice.profiles import (
    ProfileGenConfig,
    ProfileSet,
    assign_profile,
    generate_default_profiles,
    load_profiles_csv,
    save_profiles_csv,
)


def zero_profiles(n_intervals=96, n_slices=3):
    z = np.zeros((n_intervals, n_slices))
    zl = np.zeros((3, n_intervals))
    return ProfileSet(z, z, zl, zl)


@pytest.mark.parametrize("bs,p", [(2, 2), (5, 2), (4, 1), (7, 1), (3, 3), (6, 3)])
def test_assignment(bs, p):
    assert assign_profile(bs) == p


def test_assignment_table(default_profiles):
    assert default_profiles.bs_assignment == {2: 2, 3: 3, 4: 1, 5: 2, 6: 3, 7: 1}


@pytest.mark.parametrize("bs", [1, 0, -2])
def test_assignment_rejects_non_donors(bs):
    with pytest.raises(DomainError):
        assign_profile(bs)


def test_ul_congested_at_interval_30(default_profiles):
    assert default_profiles.slice_ul[30].sum() > 1000


def test_midnight_uncongested(default_profiles):
    dl, ul = default_profiles.aggregate_demand()
    assert dl[0] <= 1000 and ul[0] <= 1000


def test_congestion_windows(default_profiles):
    # 05:30 is interval 22, 12:30 ends at 50; 14:30 is 58, 18:30 ends at 74
    dl, ul = default_profiles.aggregate_demand()
    assert [t for t in range(96) if ul[t] > 1000] == list(range(22, 50))
    assert [t for t in range(96) if dl[t] > 1000] == list(range(58, 74))


def test_mean_aggregate_demand(default_profiles):
    dl, ul = default_profiles.aggregate_demand()
    assert abs(np.mean(dl + ul) - 1479) < 0.01 * 1479


def test_oracle_serves_the_whole_day(default_profiles):
    assert oracle_max_reward(SlicingEnv(default_profiles), Split.FULL_DAY) == 288


def test_slice_demand_readback(default_profiles):
    # fixed by seed 0
    assert default_profiles.slice_demand(30, 1) == (230.56, 368.14)


def test_slice_demand_errors(default_profiles):
    with pytest.raises(DomainError):
        default_profiles.slice_demand(96, 1)
    with pytest.raises(DomainError):
        default_profiles.slice_demand(0, 4)


def test_zero_profiles():
    p = zero_profiles()
    assert p.slice_demand(10, 2) == (0.0, 0.0)
    assert all(p.bs_load(bs, t) == (0.0, 0.0) for bs in range(2, 8) for t in range(96))


def test_shared_profile_stations_agree(default_profiles):
    for t in range(96):
        assert default_profiles.bs_load(2, t) == default_profiles.bs_load(5, t)
        assert default_profiles.bs_load(4, t) == default_profiles.bs_load(7, t)


def test_profile1_quiet_below_profile2(default_profiles):
    # 10:00 lies between the profile-1 bursts
    assert default_profiles.bs_load(4, 40)[0] < default_profiles.bs_load(2, 40)[0]
    assert default_profiles.bs_load(4, 40)[1] < default_profiles.bs_load(2, 40)[1]


def test_bs_load_errors(default_profiles):
    with pytest.raises(DomainError):
        default_profiles.bs_load(1, 0)
    with pytest.raises(DomainError):
        default_profiles.bs_load(8, 0)
    with pytest.raises(DomainError):
        default_profiles.bs_load(2, -1)


def test_tables_are_read_only(default_profiles):
    with pytest.raises(ValueError):
        default_profiles.slice_dl[0, 0] = 1.0


def test_profile_set_validation():
    z = np.zeros((4, 3))
    with pytest.raises(DomainError):
        ProfileSet(z, z, np.zeros((3, 5)), np.zeros((3, 5)))
    with pytest.raises(DomainError):
        ProfileSet(-np.ones((4, 3)), z, np.zeros((3, 4)), np.zeros((3, 4)))


def test_generation_is_deterministic():
    a = generate_default_profiles(ProfileGenConfig(seed=3))
    b = generate_default_profiles(ProfileGenConfig(seed=3))
    assert a == b
    assert a != generate_default_profiles(ProfileGenConfig(seed=4))


def test_infeasible_config_raises():
    with pytest.raises(GenerationError):
        generate_default_profiles(ProfileGenConfig(n_bs=2, margin_mbps=700))
    with pytest.raises(GenerationError):
        generate_default_profiles(ProfileGenConfig(dl_shares=(0.5, 0.5)))


@settings(max_examples=8)
@given(st.integers(0, 2**31 - 1))
def test_generator_guarantees_hold_for_any_seed(seed):
    p = generate_default_profiles(ProfileGenConfig(seed=seed))
    dl, ul = p.aggregate_demand()
    assert set(np.flatnonzero(ul > 1000)) == set(range(22, 50))
    assert set(np.flatnonzero(dl > 1000)) == set(range(58, 74))
    assert np.all(p.load_dl <= 1000) and np.all(p.load_ul <= 1000)


def test_csv_round_trip(default_profiles, tmp_path):
    save_profiles_csv(default_profiles, tmp_path)
    assert load_profiles_csv(tmp_path) == default_profiles
    lines = (tmp_path / "slices.csv").read_text().splitlines()
    assert lines[0] == "t,i,s,thdl_mbps,thul_mbps"
    assert (tmp_path / "loads.csv").read_text().splitlines()[0] == "profile,t,thdl_mbps,thul_mbps"


def _write(tmp_path, profiles, edit):
    save_profiles_csv(profiles, tmp_path)
    f = tmp_path / "slices.csv"
    lines = f.read_text().splitlines()
    f.write_text("\n".join(edit(lines)) + "\n")


def _parse_error(tmp_path):
    with pytest.raises(ProfileParseError) as info:
        load_profiles_csv(tmp_path)
    return info.value


def test_missing_interval(default_profiles, tmp_path):
    # drop every row of t = 95 for slice 2
    _write(tmp_path, default_profiles, lambda ls: [l for l in ls if not l.startswith("95,1,2,")])
    err = _parse_error(tmp_path)
    assert "missing" in str(err) and err.line > 0


def test_negative_value(default_profiles, tmp_path):
    _write(tmp_path, default_profiles, lambda ls: ls[:3] + ["2,1,3,-5.0,1.0"] + ls[4:])
    err = _parse_error(tmp_path)
    assert err.line == 4
    assert "slices.csv:4:" in str(err)


def test_duplicate_row(default_profiles, tmp_path):
    _write(tmp_path, default_profiles, lambda ls: ls[:2] + [ls[1]] + ls[2:])
    assert _parse_error(tmp_path).line == 3


@pytest.mark.parametrize(
    "row,line",
    [("x,1,1,1.0,1.0", 2), ("0,1,1,abc,1.0", 2), ("0,1,1,1.0", 2), ("96,1,1,1.0,1.0", 2)],
)
def test_malformed_rows(default_profiles, tmp_path, row, line):
    _write(tmp_path, default_profiles, lambda ls: [ls[0], row] + ls[2:])
    assert _parse_error(tmp_path).line == line


def test_bad_header(default_profiles, tmp_path):
    _write(tmp_path, default_profiles, lambda ls: ["t,s,dl,ul"] + ls[1:])
    assert _parse_error(tmp_path).line == 1


def test_missing_file(tmp_path):
    assert _parse_error(tmp_path).line == 0


def test_bad_loads_file(default_profiles, tmp_path):
    save_profiles_csv(default_profiles, tmp_path)
    f = tmp_path / "loads.csv"
    lines = f.read_text().splitlines()
    f.write_text("\n".join(lines[:5] + ["4,3,1.0,1.0"] + lines[6:]) + "\n")
    err = _parse_error(tmp_path)
    assert err.line == 6 and "loads.csv" in err.path
