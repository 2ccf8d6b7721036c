import math

import numpy as np
import pytest

from cogatr.dsp import dft
from cogatr.errors import DegenerateSignal, GeometryError
from cogatr.scene import (
    CLASSES,
    SPEED_OF_LIGHT_M_S,
    DatasetRecord,
    Geometry,
    RadarBand,
    Scatterer,
    TargetModel,
    acquire_look,
    add_noise,
    class_box_m,
    dataset_to_lines,
    los_unit_vector,
    make_target,
    read_dataset,
    synthesize_kspace,
    write_dataset,
)

BAND = RadarBand(1.0e9, 5.0e8, 64)


def geom(az=0.0, beta=0.0, elev=12.0):
    return Geometry(tx_azimuth_deg=az, bistatic_angle_deg=beta, elevation_deg=elev)


def scatterer_fields(target):
    return [
        (
            tuple(s.position_m),
            s.base_amplitude,
            s.directivity_center_deg,
            s.directivity_width_deg,
        )
        for s in target.scatterers
    ]


# --- geometry -------------------------------------------------------------


def test_beta_out_of_range_rejected():
    with pytest.raises(GeometryError):
        geom(beta=60.0)
    with pytest.raises(GeometryError):
        geom(beta=-1.0)
    assert geom(beta=59.99).bistatic_angle_deg == 59.99


def test_elevation_out_of_range_rejected():
    with pytest.raises(GeometryError):
        geom(elev=9.9)
    with pytest.raises(GeometryError):
        geom(elev=15.1)


def test_rx_azimuth_consistency():
    g = geom(az=350.0, beta=30.0)
    assert np.isclose(g.rx_azimuth_deg, 20.0)
    g2 = g.advanced(15.0)
    assert np.isclose(g2.tx_azimuth_deg, 5.0)
    assert np.isclose(g2.rx_azimuth_deg, 35.0)
    assert g2.bistatic_angle_deg == g.bistatic_angle_deg


def test_band_validation_and_grid():
    with pytest.raises(ValueError):
        RadarBand(1e9, -1.0, 8)
    with pytest.raises(ValueError):
        RadarBand(1e8, 5e8, 8)
    with pytest.raises(ValueError):
        RadarBand(1e9, 5e8, 1)
    f = BAND.frequencies()
    assert len(f) == 64
    assert np.isclose(f[0], 0.75e9)
    steps = np.diff(f)
    assert np.allclose(steps, BAND.bandwidth_hz / 64)
    assert np.isclose(BAND.range_bin_spacing_m, SPEED_OF_LIGHT_M_S / 1.0e9)


# --- targets --------------------------------------------------------------


def test_make_target_deterministic():
    a = make_target("APC", 7)
    b = make_target("APC", 7)
    assert scatterer_fields(a) == scatterer_fields(b)


def test_make_target_classes_distinct():
    a = make_target("APC", 7)
    b = make_target("MBT", 7)
    assert scatterer_fields(a) != scatterer_fields(b)


def test_make_target_seed_variation_same_box():
    a = make_target("APC", 7)
    b = make_target("APC", 8)
    assert scatterer_fields(a) != scatterer_fields(b)
    box = class_box_m("APC")
    for t in (a, b):
        for s in t.scatterers:
            for axis in range(3):
                assert abs(s.position_m[axis]) <= box[axis] / 2 + 1e-12


@pytest.mark.parametrize("label", CLASSES)
@pytest.mark.parametrize("seed", [0, 1, 99])
def test_target_bounding_boxes_vehicle_scale(label, seed):
    target = make_target(label, seed)
    assert len(target.scatterers) > 0
    positions = np.array([s.position_m for s in target.scatterers])
    extent = positions.max(axis=0) - positions.min(axis=0)
    assert extent[0] <= 12.0 and extent[1] <= 4.0 and extent[2] <= 4.0


def test_target_requires_scatterers():
    with pytest.raises(ValueError):
        TargetModel(class_label="APC", scatterers=(), seed=1)


# --- synthesis ------------------------------------------------------------


def _single(position, amp=1.0, width=1.0e9):  # width so wide the pattern is 1.0
    return TargetModel(
        class_label="APC",
        scatterers=(
            Scatterer(
                position_m=np.asarray(position, dtype=float),
                base_amplitude=amp,
                directivity_center_deg=0.0,
                directivity_width_deg=width,
            ),
        ),
        seed=0,
    )


def test_single_scatterer_at_origin_flat_spectrum():
    k = synthesize_kspace(_single([0, 0, 0]), geom(az=123.4, beta=42.0), BAND)
    assert np.allclose(np.abs(k), np.abs(k[0]), rtol=1e-12)


def test_zero_amplitude_gives_zero_kspace():
    k = synthesize_kspace(_single([1.0, 2.0, 0.5], amp=0.0), geom(az=10.0), BAND)
    assert np.all(k == 0)


def test_monostatic_phase_reduction():
    target = _single([2.0, -1.0, 0.5])
    g = geom(az=33.0, beta=0.0, elev=11.0)
    k = synthesize_kspace(target, g, BAND)
    u = los_unit_vector(g.tx_azimuth_deg, g.elevation_deg)
    delay = 2.0 * (target.scatterers[0].position_m @ u) / SPEED_OF_LIGHT_M_S
    want = np.exp(-2j * np.pi * BAND.frequencies() * delay)
    assert np.allclose(k, want, rtol=1e-12, atol=1e-12)


def test_two_point_interference_matches_analytic_pattern():
    # Two unit scatterers 0.3 m apart along the monostatic line of sight.
    g = geom(az=40.0, beta=0.0, elev=12.0)
    u = los_unit_vector(g.tx_azimuth_deg, g.elevation_deg)
    sep = 0.3
    target = TargetModel(
        class_label="APC",
        scatterers=(
            _single([0, 0, 0]).scatterers[0],
            _single(-sep * u).scatterers[0],
        ),
        seed=0,
    )
    k = synthesize_kspace(target, g, BAND)
    tau = 2.0 * sep / SPEED_OF_LIGHT_M_S
    # |1 + exp(+j 2 pi f tau)| = 2 |cos(pi f tau)|
    want = 2.0 * np.abs(np.cos(np.pi * BAND.frequencies() * tau))
    assert np.allclose(np.abs(k), want, rtol=1e-9)

    # Range profile: peaks in adjacent resolution cells (0.3 m = one bin).
    profile = np.abs(dft(k, bandwidth_hz=BAND.bandwidth_hz).samples)
    top2 = set(np.argsort(profile)[-2:])
    assert top2 == {0, 1}


def test_rotational_covariance():
    base = make_target("MSL", 3)
    delta = 37.5
    rad = math.radians(delta)
    rot = np.array(
        [
            [math.cos(rad), -math.sin(rad), 0.0],
            [math.sin(rad), math.cos(rad), 0.0],
            [0.0, 0.0, 1.0],
        ]
    )
    rotated = TargetModel(
        class_label=base.class_label,
        scatterers=tuple(
            Scatterer(
                position_m=rot @ s.position_m,
                base_amplitude=s.base_amplitude,
                directivity_center_deg=(s.directivity_center_deg + delta) % 360.0,
                directivity_width_deg=s.directivity_width_deg,
            )
            for s in base.scatterers
        ),
        seed=base.seed,
    )
    g1 = geom(az=10.0, beta=25.0, elev=13.0)
    g2 = geom(az=10.0 + delta, beta=25.0, elev=13.0)
    k1 = synthesize_kspace(base, g1, BAND)
    k2 = synthesize_kspace(rotated, g2, BAND)
    assert np.allclose(np.abs(k1), np.abs(k2), rtol=1e-9)


# --- noise ----------------------------------------------------------------


def test_noise_inf_snr_returns_input():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    y = add_noise(x, float("inf"), 123)
    assert np.array_equal(x, y)


def test_noise_zero_signal_rejected():
    with pytest.raises(DegenerateSignal):
        add_noise(np.zeros(8, dtype=complex), 10.0, 1)


def test_noise_deterministic():
    x = np.ones(32, dtype=complex)
    assert np.array_equal(add_noise(x, 5.0, 99), add_noise(x, 5.0, 99))
    assert not np.array_equal(add_noise(x, 5.0, 99), add_noise(x, 5.0, 100))


@pytest.mark.parametrize("snr_db", [0.0, 10.0])
def test_noise_calibration(snr_db):
    n = 100_000
    x = np.ones(n, dtype=complex)
    noisy = add_noise(x, snr_db, 7)
    measured = 10.0 * np.log10(1.0 / np.mean(np.abs(noisy - x) ** 2))
    assert abs(measured - snr_db) <= 0.5


def test_look_determinism_end_to_end():
    target = make_target("STR", 5)
    g = geom(az=77.0, beta=20.0, elev=11.0)
    look1 = acquire_look(target, g, BAND, 10.0, [4, 2])
    look2 = acquire_look(make_target("STR", 5), g, BAND, 10.0, [4, 2])
    assert np.array_equal(look1.kspace, look2.kspace)
    assert look1.kspace.size == BAND.num_frequency_samples


# --- dataset file ---------------------------------------------------------


def _records():
    target = make_target("APC", 1)
    for az in (0.0, 5.0):
        g = geom(az=az, beta=15.0, elev=11.7)
        yield DatasetRecord(
            class_label="APC",
            target_seed=1,
            geometry=g,
            snr_db=float("inf"),
            kspace=synthesize_kspace(target, g, BAND),
        )


def test_dataset_roundtrip(tmp_path):
    path = tmp_path / "ds.jsonl"
    write_dataset(path, BAND, _records())
    band, records = read_dataset(path)
    assert band == BAND
    assert len(records) == 2
    for got, want in zip(records, _records()):
        assert got.class_label == want.class_label
        assert got.target_seed == want.target_seed
        assert got.geometry.tx_azimuth_deg == want.geometry.tx_azimuth_deg
        assert got.snr_db == math.inf
        assert np.array_equal(got.kspace, want.kspace)


def test_dataset_bytes_reproducible(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    write_dataset(a, BAND, _records())
    write_dataset(b, BAND, _records())
    assert a.read_bytes() == b.read_bytes()


def test_dataset_header_and_field_names(tmp_path):
    import json

    lines = list(dataset_to_lines(BAND, _records()))
    header = json.loads(lines[0])
    assert header["format"] == "cogatr-ds-v1"
    assert header["num_frequency_samples"] == 64
    rec = json.loads(lines[1])
    assert set(rec) == {
        "class",
        "target_seed",
        "tx_az_deg",
        "beta_deg",
        "elev_deg",
        "snr_db",
        "kspace_re",
        "kspace_im",
    }
    assert len(rec["kspace_re"]) == 64
