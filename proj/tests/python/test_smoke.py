import math

import pytest

import lotos


def test_autocorrelation():
    assert lotos.autocorrelation_coeffs([1.0, 1.0]) == [2.0, 1.0]
    assert lotos.autocorrelation_coeffs([1.0, 2.0, 3.0]) == [14.0, 8.0, 3.0]


def test_circulant_spectrum_known_case():
    spec = lotos.circulant_spectrum([1.0, 1.0], 4)
    assert spec["s_squared"] == pytest.approx([4.0, 2.0, 0.0, 2.0])
    assert spec["singular_values_sorted"] == pytest.approx(
        [2.0, math.sqrt(2.0), math.sqrt(2.0), 0.0]
    )


def test_bounds_are_consistent():
    taps = [0.5, -0.2, 0.1]
    n = 16
    assert lotos.lemma_gap_bound(taps, n, 2) == pytest.approx(
        lotos.corollary_gap_bound(taps, n, 1, 1)
    )
    assert lotos.theorem_cross_bound(0.0, taps, n, 0) == 0.0
    report = lotos.verify_circulant_bounds([1.0, 0.5], [0.3, -0.4, 0.2], 16)
    assert report["all_hold"]


def test_svd_and_spectral_norm():
    s, u_rows, v_rows = lotos.svd([[3.0, 0.0], [0.0, 1.0]])
    assert s == pytest.approx([3.0, 1.0])
    assert len(u_rows) == 2 and len(v_rows) == 2
    assert lotos.spectral_norm([[3.0, 0.0], [0.0, 1.0]]) == pytest.approx(3.0, rel=1e-8)


def test_dataset_generation_deterministic():
    params = {"classes": 3, "dim": 6, "train": 32, "test": 16, "separation": 8}
    a = lotos.generate_dataset("gaussian_blobs", params, seed=5)
    b = lotos.generate_dataset("gaussian_blobs", params, seed=5)
    assert a["inputs"] == b["inputs"]
    assert a["labels"] == b["labels"]
    assert a["classes"] == 3
    assert all(0.0 <= v <= 1.0 for row in a["inputs"] for v in row)


def test_train_attack_and_transfer_roundtrip():
    params = {"n": 32, "classes": 4, "train": 96, "test": 48}
    ensemble = lotos.train_ensemble(
        "patch_textures", params, seed=3, ensemble_size=2, method="clip", epochs=3
    )
    assert ensemble.size == 2

    data = lotos.generate_dataset("patch_textures", params, seed=3)
    x, y = data["inputs"][0], data["labels"][0]
    cls, probs = ensemble.predict(x)
    assert 0 <= cls < 4
    assert sum(probs) == pytest.approx(1.0)

    model = ensemble.model(0)
    x_adv = lotos.pgd_attack(model, x, y, eps=0.3, steps=10)
    delta = math.sqrt(sum((a - b) ** 2 for a, b in zip(x_adv, x)))
    assert delta <= 0.3 + 1e-9

    report = lotos.transfer_rate(ensemble, "patch_textures", params, seed=3, eps=0.3, steps=10)
    assert len(report["pairs"]) == 2


def test_clip_model_controls_norms():
    ensemble = lotos.train_ensemble(
        "patch_textures",
        {"n": 16, "classes": 3, "train": 64, "test": 16},
        seed=7,
        ensemble_size=1,
        method="orig",
        epochs=2,
    )
    model = ensemble.model(0)
    lotos.clip_model(model, C=1.0)
    assert all(s <= 1.01 + 1e-6 for s in model.layer_spectral_norms())
    assert model.loss_lipschitz_bound() <= math.sqrt(2.0) * 1.01**3 + 1e-6
