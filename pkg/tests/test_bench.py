import json

import pytest

from planesync.bench import (
    Scenario,
    ZeroObjects,
    load_scenario,
    normalized_room_transfer,
    render_csv,
    render_report,
    render_table,
    run_scenario,
    run_scenario_once,
    table_from_csv,
)
from planesync.netsim import LinkProfile
from planesync.wire import FramingProfile

SD_LINK = LinkProfile(
    one_way_delay_ms=2.5, jitter_ms=0.25, loss_fraction=0.0, bandwidth_kbps=240_000, seed=1
)


def sd_scenario(participants=2, framing=FramingProfile.PLAIN, link=SD_LINK, **kw):
    return Scenario(
        name="SD1",
        participants=participants,
        link=link,
        framing=framing,
        limit_profile="photon",
        world="living",
        **kw,
    )


# --- normalization formula ---------------------------------------------------


def test_normalization_formula_exact():
    assert normalized_room_transfer(1.92, 80) == 1.2


def test_normalization_identity_at_fifty():
    for t in (0.0, 0.37, 1.6, 123.456):
        assert normalized_room_transfer(t, 50) == t


def test_normalization_living_room_count():
    assert normalized_room_transfer(2.53, 90) == pytest.approx(1.406, abs=5e-4)


def test_normalization_rejects_zero_objects():
    with pytest.raises(ZeroObjects):
        normalized_room_transfer(1.0, 0)
    with pytest.raises(ValueError):
        normalized_room_transfer(-0.1, 10)


# --- scenario files ------------------------------------------------------------


def test_load_packaged_scenarios():
    for name, participants in [("sd1", 2), ("sd2", 4), ("ld1", 2), ("md4", 4)]:
        sc = load_scenario(name)
        assert sc.participants == participants
        assert sc.world == "living"
        sc.validate()


def test_load_scenario_file(tmp_path):
    doc = {
        "name": "custom",
        "participants": 3,
        "link": {"delay_ms": 10.0, "jitter_ms": 1.0, "loss": 0.05,
                 "bandwidth_kbps": 50000, "seed": 9},
        "framing": "framed",
        "limit_profile": "netcode",
        "world": "personal",
    }
    path = tmp_path / "custom.json"
    path.write_text(json.dumps(doc))
    sc = load_scenario(path)
    assert sc.framing is FramingProfile.FRAMED
    assert sc.link.loss_fraction == 0.05
    assert sc.n_followers() == 2


def test_load_scenario_missing():
    with pytest.raises(FileNotFoundError):
        load_scenario("no-such-scenario")


# --- single runs -----------------------------------------------------------------


def test_run_delivers_whole_world():
    rep = run_scenario_once(sd_scenario(), 1)
    assert rep.objects_received == 90
    assert rep.net_dropped == 0
    assert rep.window_s > 0


def test_run_latency_matches_link_schedule():
    # zero jitter, delay only on the follower link: reported latency must
    # agree with the emulator's own delivery schedule
    d_ms = 25.0
    link = LinkProfile(one_way_delay_ms=d_ms, jitter_ms=0.0, bandwidth_kbps=1e6, seed=1)
    fast = LinkProfile(one_way_delay_ms=0.0, jitter_ms=0.0, bandwidth_kbps=1e6, seed=1)
    sc = sd_scenario(leader_link=fast, follower_links=(link,))
    rep = run_scenario_once(sc, 1)
    transits = [
        (r.deliver_us - r.send_us) / 1000.0 for r in rep.schedule if r.deliver_us is not None
    ]
    for lat in rep.latencies_ms:
        assert abs(lat - d_ms) <= 1.0
        assert any(abs(lat - t) <= 1.0 for t in transits)


def test_clock_offset_compensated():
    link = LinkProfile(one_way_delay_ms=5.0, jitter_ms=0.0, bandwidth_kbps=1e6, seed=1)
    base = sd_scenario(follower_links=(link,), leader_link=link)
    skewed = sd_scenario(
        follower_links=(link,), leader_link=link, clock_offsets_us=(25_000, -13_000)
    )
    rep_a = run_scenario_once(base, 1)
    rep_b = run_scenario_once(skewed, 1)
    assert rep_a.latencies_ms == pytest.approx(rep_b.latencies_ms, abs=1.0)


def test_eventual_consistency_under_heavy_loss():
    link = LinkProfile(
        one_way_delay_ms=5.0, jitter_ms=0.5, loss_fraction=0.5, bandwidth_kbps=240_000, seed=17
    )
    sc = sd_scenario(participants=3, link=link)
    rep = run_scenario_once(sc, 3)
    assert rep.objects_received == 90
    assert rep.net_dropped > 0


# --- aggregation and reports ------------------------------------------------------


def test_report_is_deterministic_and_byte_identical():
    a = run_scenario(sd_scenario(), repeats=2)
    b = run_scenario(sd_scenario(), repeats=2)
    assert render_csv([a]) == render_csv([b])
    assert a.latency_mean_ms == b.latency_mean_ms


def test_sd_bounds_hold():
    report = run_scenario(sd_scenario(), repeats=2)
    assert report.latency_mean_ms < 150.0
    assert report.room50_s < 1.6
    assert report.loss_fraction == 0.0


def test_framed_exceeds_plain_by_exact_overhead():
    plain = run_scenario(sd_scenario(framing=FramingProfile.PLAIN), repeats=2)
    framed = run_scenario(sd_scenario(framing=FramingProfile.FRAMED), repeats=2)
    assert framed.down_datagrams == plain.down_datagrams
    assert framed.down_bytes - plain.down_bytes == 20 * plain.down_datagrams
    assert framed.up_datagrams == plain.up_datagrams
    assert framed.up_bytes - plain.up_bytes == 20 * plain.up_datagrams
    assert framed.throughput_bps >= plain.throughput_bps


def test_table_and_csv_agree_value_for_value():
    report = run_scenario(sd_scenario(), repeats=1)
    table, csv_text = render_report([report])
    csv_cells = csv_text.strip().splitlines()[1].split(",")
    for cell in csv_cells:
        assert cell in table


def test_table_from_csv_round_trip():
    report = run_scenario(sd_scenario(), repeats=1)
    table, csv_text = render_report([report])
    assert table_from_csv(csv_text) == table


def test_empty_reports_rejected():
    with pytest.raises(ValueError):
        render_report([])
    with pytest.raises(ValueError):
        render_table([])
    with pytest.raises(ValueError):
        render_csv([])
