import numpy as np
import pytest

from cogatr.classifier import (
    NUM_SECTORS,
    SECTOR_WIDTH_DEG,
    VARIANCE_FLOOR,
    TemplateBank,
    bank_from_json,
    bank_to_json,
    load_bank,
    save_bank,
    score,
    sector_of,
    train,
)
from cogatr.dsp import Domain, FeatureVector
from cogatr.errors import DimensionMismatch, EmptyCell, MixedDomain
from cogatr.scene import CLASSES

N_F = 12


def fv(values, domain=Domain.RANGE):
    return FeatureVector(domain=domain, values=np.asarray(values, dtype=float))


def cell_azimuth(sector):
    return (sector + 0.5) * SECTOR_WIDTH_DEG


def make_bank(means, variance=None, domain=Domain.RANGE):
    means = np.asarray(means, dtype=float)
    if variance is None:
        variance = np.ones(means.shape[-1])
    return TemplateBank(
        domain=domain,
        means=means,
        shared_variance=np.asarray(variance, dtype=float),
        training_counts=np.ones((len(CLASSES), NUM_SECTORS), dtype=int),
    )


def exhaustive_best(bank, values):
    """Oracle: scan all 100 cells for the variance-weighted nearest template."""
    best = None
    for ci in range(len(CLASSES)):
        for s in range(NUM_SECTORS):
            d = float(((values - bank.means[ci, s]) ** 2 / bank.shared_variance).sum())
            if best is None or d < best[0]:
                best = (d, ci, s)
    return CLASSES[best[1]], best[2]


# --- sector_of ------------------------------------------------------------


@pytest.mark.parametrize(
    "azimuth,expected",
    [(0.0, 0), (14.4, 1), (14.39, 0), (180.0, 12), (345.6, 24), (359.9, 24), (360.0, 0), (-0.1, 24), (720.5, 0)],
)
def test_sector_of_values(azimuth, expected):
    assert sector_of(azimuth) == expected


def test_sector_of_surjective_with_25_pieces():
    fine = np.arange(0.0, 360.0, 0.01)
    sectors = np.array([sector_of(a) for a in fine])
    assert set(sectors) == set(range(NUM_SECTORS))
    assert int((np.diff(sectors) != 0).sum()) == NUM_SECTORS - 1


# --- train ----------------------------------------------------------------


def _full_coverage_samples(rng, per_cell=2, jitter=0.0, domain=Domain.RANGE):
    means = rng.uniform(0.0, 1.0, size=(len(CLASSES), NUM_SECTORS, N_F))
    samples = []
    for ci, label in enumerate(CLASSES):
        for s in range(NUM_SECTORS):
            for _ in range(per_cell):
                noise = jitter * rng.standard_normal(N_F) if jitter else 0.0
                samples.append((fv(means[ci, s] + noise, domain), label, cell_azimuth(s)))
    return means, samples


def test_train_identical_members_hit_variance_floor():
    rng = np.random.default_rng(0)
    means, samples = _full_coverage_samples(rng, per_cell=2, jitter=0.0)
    bank = train(samples)
    assert np.all(bank.shared_variance == VARIANCE_FLOOR)
    assert np.allclose(bank.means, means)
    assert np.all(bank.training_counts == 2)


def test_train_cell_means_are_sample_means():
    rng = np.random.default_rng(1)
    _, samples = _full_coverage_samples(rng, per_cell=3, jitter=0.1)
    bank = train(samples)
    target_cell = [
        s[0].values for s in samples if s[1] == "MSL" and sector_of(s[2]) == 4
    ]
    assert np.allclose(bank.means[CLASSES.index("MSL"), 4], np.mean(target_cell, axis=0))


def test_train_pooled_variance_matches_direct_formula():
    rng = np.random.default_rng(2)
    _, samples = _full_coverage_samples(rng, per_cell=4, jitter=0.3)
    bank = train(samples)
    groups = {}
    for f, label, az in samples:
        groups.setdefault((label, sector_of(az)), []).append(f.values)
    residual = np.zeros(N_F)
    total = 0
    for members in groups.values():
        stack = np.array(members)
        residual += ((stack - stack.mean(axis=0)) ** 2).sum(axis=0)
        total += len(members)
    want = residual / (total - len(groups))
    assert np.allclose(bank.shared_variance, np.maximum(want, VARIANCE_FLOOR))


def test_train_empty_cell_reported():
    rng = np.random.default_rng(3)
    _, samples = _full_coverage_samples(rng)
    kept = [s for s in samples if not (s[1] == "MBT" and sector_of(s[2]) == 7)]
    with pytest.raises(EmptyCell) as err:
        train(kept)
    assert ("MBT", 7) in err.value.cells
    assert "MBT" in str(err.value) and "7" in str(err.value)


def test_train_mixed_domain_rejected():
    rng = np.random.default_rng(4)
    _, samples = _full_coverage_samples(rng)
    samples[5] = (fv(samples[5][0].values, Domain.FREQUENCY), samples[5][1], samples[5][2])
    with pytest.raises(MixedDomain):
        train(samples)


def test_train_recovers_known_gaussians():
    # Derived check: 10 draws per cell from known Gaussians; at least 95% of
    # (cell, dimension) mean estimates land within 3 sigma / sqrt(10).
    rng = np.random.default_rng(5)
    sigma = 0.2
    true_means = rng.uniform(0.0, 1.0, size=(len(CLASSES), NUM_SECTORS, N_F))
    samples = []
    for ci, label in enumerate(CLASSES):
        for s in range(NUM_SECTORS):
            draws = true_means[ci, s] + sigma * rng.standard_normal((10, N_F))
            samples.extend((fv(v), label, cell_azimuth(s)) for v in draws)
    bank = train(samples)
    err = np.abs(bank.means - true_means)
    within = err <= 3 * sigma / np.sqrt(10)
    assert within.mean() >= 0.95
    assert np.allclose(bank.shared_variance, sigma**2, rtol=0.2)


# --- score ----------------------------------------------------------------


def test_score_exact_mean_wins_its_cell():
    rng = np.random.default_rng(6)
    means = rng.uniform(0.0, 1.0, size=(len(CLASSES), NUM_SECTORS, N_F))
    bank = make_bank(means)
    ci, s = 2, 13
    result = score(bank, fv(means[ci, s]))
    assert result.best_class == CLASSES[ci]
    assert result.best_sector == s
    assert result.per_class_log_likelihood[CLASSES[ci]] == 0.0


def test_score_two_class_midpoint_symmetry():
    m = np.ones(N_F) / np.sqrt(N_F)
    means = np.zeros((len(CLASSES), NUM_SECTORS, N_F))
    means[0, :, :] = m
    means[1, :, :] = -m
    means[2, :, :] = 50.0
    means[3, :, :] = -50.0
    bank = make_bank(means)
    assert score(bank, fv(0.6 * m)).best_class == CLASSES[0]


def test_score_tie_breaks_in_class_order():
    means = np.full((len(CLASSES), NUM_SECTORS, N_F), 3.0)
    bank = make_bank(means)
    assert score(bank, fv(np.zeros(N_F))).best_class == "APC"


def test_score_matches_exhaustive_nearest_template():
    rng = np.random.default_rng(7)
    for _ in range(200):
        means = rng.standard_normal((len(CLASSES), NUM_SECTORS, N_F))
        variance = rng.uniform(0.1, 2.0, N_F)
        bank = make_bank(means, variance)
        x = rng.standard_normal(N_F)
        got = score(bank, fv(x))
        want_class, want_sector = exhaustive_best(bank, x)
        assert got.best_class == want_class
        assert got.best_sector == want_sector


def test_score_invariant_to_variance_scale():
    rng = np.random.default_rng(8)
    means = rng.standard_normal((len(CLASSES), NUM_SECTORS, N_F))
    variance = rng.uniform(0.5, 1.5, N_F)
    x = rng.standard_normal(N_F)
    base = score(make_bank(means, variance), fv(x))
    for alpha in (0.01, 7.0, 1e6):
        scaled = score(make_bank(means, alpha * variance), fv(x))
        assert scaled.best_class == base.best_class
        assert scaled.best_sector == base.best_sector


def test_score_dimension_and_domain_mismatch():
    bank = make_bank(np.zeros((len(CLASSES), NUM_SECTORS, N_F)))
    with pytest.raises(DimensionMismatch):
        score(bank, fv(np.zeros(N_F + 1)))
    with pytest.raises(DimensionMismatch):
        score(bank, fv(np.zeros(N_F), Domain.FREQUENCY))


def test_scoring_training_means_self_consistent():
    rng = np.random.default_rng(9)
    _, samples = _full_coverage_samples(rng, per_cell=3, jitter=0.02)
    bank = train(samples)
    hits = 0
    for ci, label in enumerate(CLASSES):
        for s in range(NUM_SECTORS):
            r = score(bank, fv(bank.means[ci, s]))
            hits += r.best_class == label and r.best_sector == s
    assert hits == len(CLASSES) * NUM_SECTORS


# --- persistence ----------------------------------------------------------


def test_bank_roundtrip_bit_stable(tmp_path):
    rng = np.random.default_rng(10)
    _, samples = _full_coverage_samples(rng, per_cell=3, jitter=0.17)
    bank = train(samples)
    path = tmp_path / "bank.json"
    save_bank(bank, path)
    loaded = load_bank(path)
    assert np.array_equal(loaded.means, bank.means)
    assert np.array_equal(loaded.shared_variance, bank.shared_variance)
    assert np.array_equal(loaded.training_counts, bank.training_counts)
    assert loaded.domain is bank.domain
    # serialize -> parse -> serialize is byte-stable
    assert bank_to_json(bank_from_json(bank_to_json(bank))) == bank_to_json(bank)


def test_bank_file_header(tmp_path):
    import json

    rng = np.random.default_rng(11)
    _, samples = _full_coverage_samples(rng, per_cell=2, jitter=0.1)
    bank = train(samples)
    payload = json.loads(bank_to_json(bank))
    assert payload["format"] == "cogatr-bank-v1"
    assert payload["domain"] == "RANGE"
    assert payload["n_f"] == N_F
    assert f"APC/0" in payload["means"]
    assert len(payload["means"]) == len(CLASSES) * NUM_SECTORS
