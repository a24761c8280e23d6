import filecmp

import numpy as np
import pytest

from district_dsm import data
from district_dsm.data import (
    BuildingSpec,
    BuildingType,
    generate_synthetic,
    load_dataset,
    month_blocks,
    save_dataset,
    storage_capacity,
)


def _spec(**kw):
    base = dict(
        id=1,
        building_type=BuildingType.COMMERCIAL,
        cooling_demand=np.r_[np.zeros(23), 100.0],
        non_shiftable_load=np.ones(24),
        cooling_storage_factor=3.0,
    )
    base.update(kw)
    return BuildingSpec(**base)


def test_storage_capacity_examples():
    assert storage_capacity(_spec(), "cooling") == 300.0
    dhw = np.tile([0.0, 2.0, 5.0, 1.0], 6)
    assert storage_capacity(_spec(dhw_demand=dhw, dhw_storage_factor=3.0), data.StorageKind.DHW) == 15.0
    with pytest.raises(data.NoSuchStorage):
        storage_capacity(_spec(cooling_storage_factor=0.0), "cooling")
    with pytest.raises(data.NoSuchStorage):
        storage_capacity(_spec(), "dhw")


def test_storage_capacity_monotone_in_factor():
    caps = [storage_capacity(_spec(cooling_storage_factor=f), "cooling") for f in (0.5, 1.0, 2.0, 3.0)]
    assert caps == sorted(caps)


def test_month_blocks():
    assert month_blocks(8760) == [(i * 730, (i + 1) * 730) for i in range(12)]
    assert month_blocks(48) == [(0, 48)]
    assert month_blocks(24 * 90) == [(0, 720), (720, 1440), (1440, 2160)]
    assert month_blocks(24 * 45)[-1] == (720, 1080)


def test_generate_full_year_is_deterministic(tmp_path):
    a = generate_synthetic(9, 365, seed=1)
    assert len(a.buildings) == 9 and a.hours == 8760
    save_dataset(a, tmp_path / "a")
    save_dataset(generate_synthetic(9, 365, seed=1), tmp_path / "b")
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    match, mismatch, errors = filecmp.cmpfiles(tmp_path / "a", tmp_path / "b", names, shallow=False)
    assert mismatch == [] and errors == []


def test_generate_minimal():
    ds = generate_synthetic(1, 2, seed=7)
    assert ds.hours == 48 and len(ds.buildings) == 1


def test_generate_shape_properties():
    ds = generate_synthetic(2, 14, seed=3)
    dark = ds.weather.direct_solar_rad == 0
    assert dark.any()
    for b in ds.buildings:
        if b.solar_gen_per_kw is not None:
            assert np.all(b.solar_gen_per_kw[dark] == 0)
        hourly = b.cooling_demand.reshape(-1, 24).mean(axis=0)
        assert 12 <= int(np.argmax(hourly)) <= 17
    dhw = ds.buildings[0].dhw_demand.reshape(-1, 24).mean(axis=0)
    assert dhw[7] > dhw[3] and dhw[19] > dhw[14]


def test_generate_rejects_bad_arguments():
    with pytest.raises(ValueError):
        generate_synthetic(0, 10, seed=1)
    with pytest.raises(ValueError):
        generate_synthetic(2, 1, seed=1)


def test_template_matches_design_district():
    ds = generate_synthetic(9, 2, seed=0)
    assert [b.has_dhw_storage for b in ds.buildings] == [True, True, False, False] + [True] * 5
    assert [b.pv_kw for b in ds.buildings] == [120.0, 0.0, 0.0, 40.0, 25.0, 20.0, 0.0, 0.0, 0.0]
    assert all(b.cooling_storage_factor == 3.0 for b in ds.buildings)


def test_round_trip_is_byte_identical(tmp_path):
    ds = generate_synthetic(4, 3, seed=2, climate="3", start_month=7, start_weekday=4)
    save_dataset(ds, tmp_path / "one")
    loaded = load_dataset(tmp_path / "one")
    save_dataset(loaded, tmp_path / "two")
    for p in (tmp_path / "one").iterdir():
        assert p.read_bytes() == (tmp_path / "two" / p.name).read_bytes()
    assert [b.id for b in loaded.buildings] == [b.id for b in ds.buildings]
    assert (loaded.start_month, loaded.start_weekday, loaded.climate_zone_label) == (7, 4, "3")
    for x, y in zip(ds.buildings, loaded.buildings):
        np.testing.assert_array_equal(x.cooling_demand, y.cooling_demand)


def test_building_order_preserved(tmp_path):
    ds = generate_synthetic(3, 2, seed=2)
    save_dataset(ds, tmp_path)
    text = (tmp_path / "district.toml").read_text()
    # reorder the config entries: order on load follows the config file
    blocks = text.split("[[buildings]]\n")
    head, entries = blocks[0], blocks[1:]
    (tmp_path / "district.toml").write_text(head + "".join("[[buildings]]\n" + e for e in reversed(entries)))
    assert [b.id for b in load_dataset(tmp_path).buildings] == [3, 2, 1]


def test_load_single_building_48h(tmp_path):
    save_dataset(generate_synthetic(1, 2, seed=1), tmp_path)
    ds = load_dataset(tmp_path)
    assert len(ds.buildings) == 1 and ds.hours == 48


def test_load_errors(tmp_path):
    save_dataset(generate_synthetic(2, 2, seed=1), tmp_path)
    weather = tmp_path / "weather.csv"
    lines = weather.read_text().splitlines()

    weather.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(data.LengthMismatch):
        load_dataset(tmp_path)

    weather.write_text("\n".join(["hour,t_out_c,direct_solar_w_m2"] + lines[1:]) + "\n")
    with pytest.raises(data.SchemaMismatch):
        load_dataset(tmp_path)

    weather.write_text("\n".join(lines) + "\n")
    b1 = tmp_path / "building_1.csv"
    rows = b1.read_text().splitlines()
    fields = rows[5].split(",")
    fields[1] = "-3.0"
    rows[5] = ",".join(fields)
    b1.write_text("\n".join(rows) + "\n")
    with pytest.raises(data.NegativeDemand):
        load_dataset(tmp_path)

    b1.unlink()
    with pytest.raises(data.MissingFile):
        load_dataset(tmp_path)
    with pytest.raises(data.MissingFile):
        load_dataset(tmp_path / "nope")


def test_full_year_weather_short_by_one_hour(tmp_path):
    save_dataset(generate_synthetic(9, 365, seed=1), tmp_path)
    weather = tmp_path / "weather.csv"
    lines = weather.read_text().splitlines()
    assert len(lines) == 8761
    weather.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(data.LengthMismatch):
        load_dataset(tmp_path)


def test_invariant_violations():
    with pytest.raises(data.SchemaMismatch):
        _spec(dhw_storage_factor=3.0).validate()
    with pytest.raises(data.SchemaMismatch):
        _spec(pv_kw=10.0).validate()
    with pytest.raises(data.LengthMismatch):
        _spec(cooling_demand=np.ones(25), non_shiftable_load=np.ones(25)).validate()


def test_committed_fixture_matches_generator(zone_a):
    assert zone_a.hours == 24 * 90 and len(zone_a.buildings) == 3
    fresh = generate_synthetic(3, 90, seed=1)
    for x, y in zip(fresh.buildings, zone_a.buildings):
        np.testing.assert_array_equal(x.cooling_demand, y.cooling_demand)
