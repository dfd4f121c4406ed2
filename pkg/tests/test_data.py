"""Dataset container, file formats, and the synthetic generator."""

import numpy as np
import pytest

import embedadapt as ea
from embedadapt.data import (
    dataset_fingerprint,
    load_labels,
    require_both_classes,
    save_labels,
)


def small_ds(n=12, seed=0):
    spec = ea.SynthSpec(
        n_samples=n, n_modalities=2, dims=(5, 3), signal_dims=(2, 1),
        noise_sigma=1.0, nonlinearity="none", seed=seed,
    )
    return ea.generate_synthetic(spec)


# --- container ---------------------------------------------------------------


def test_dataset_validation_rejects_bad_labels():
    with pytest.raises(ValueError, match=r"label outside \{0,1\}"):
        ea.MultimodalDataset(
            modality_names=("m0",),
            modalities=(np.zeros((3, 2)),),
            labels=np.array([0, 1, 2]),
            sample_ids=("a", "b", "c"),
        )


def test_dataset_validation_rejects_duplicate_ids():
    with pytest.raises(ValueError, match="duplicate sample id"):
        ea.MultimodalDataset(
            modality_names=("m0",),
            modalities=(np.zeros((2, 2)),),
            labels=np.array([0, 1]),
            sample_ids=("a", "a"),
        )


def test_dataset_validation_rejects_nonfinite():
    mat = np.zeros((2, 2))
    mat[1, 1] = np.nan
    with pytest.raises(ValueError, match="non-finite"):
        ea.MultimodalDataset(
            modality_names=("m0",),
            modalities=(mat,),
            labels=np.array([0, 1]),
            sample_ids=("a", "b"),
        )


def test_dataset_rejects_row_count_mismatch():
    with pytest.raises(ValueError, match="n_samples"):
        ea.MultimodalDataset(
            modality_names=("m0", "m1"),
            modalities=(np.zeros((3, 2)), np.zeros((2, 2))),
            labels=np.array([0, 1, 1]),
            sample_ids=("a", "b", "c"),
        )


def test_dataset_arrays_are_readonly():
    ds = small_ds()
    with pytest.raises(ValueError):
        ds.modalities[0][0, 0] = 5.0
    with pytest.raises(ValueError):
        ds.labels[0] = 1


def test_subset_preserves_alignment():
    ds = small_ds()
    sub = ds.subset([3, 1, 7])
    assert sub.sample_ids == tuple(ds.sample_ids[i] for i in (3, 1, 7))
    assert np.array_equal(sub.labels, ds.labels[[3, 1, 7]])
    for a, b in zip(sub.modalities, ds.modalities):
        assert np.array_equal(a, b[[3, 1, 7]])


def test_concat_modalities_single_is_unchanged():
    ds = small_ds()
    one = ea.MultimodalDataset(
        modality_names=("m0",),
        modalities=(ds.modalities[0],),
        labels=ds.labels,
        sample_ids=ds.sample_ids,
    )
    assert np.array_equal(ea.concat_modalities(one), ds.modalities[0])


def test_concat_modalities_slices_back():
    ds = small_ds()
    cat = ea.concat_modalities(ds)
    assert cat.shape == (ds.n_samples, sum(ds.dims))
    assert np.array_equal(cat[:, :5], ds.modalities[0])
    assert np.array_equal(cat[:, 5:], ds.modalities[1])


def test_require_both_classes():
    require_both_classes(np.array([0, 1, 1]))
    with pytest.raises(ValueError, match="both classes"):
        require_both_classes(np.array([1, 1, 1]))


# --- file formats ------------------------------------------------------------


def test_embeddings_round_trip_exact(tmp_path):
    rng = np.random.default_rng(5)
    mat = rng.normal(size=(10, 4)) * np.logspace(-8, 8, 4)
    ids = [f"s{i:02d}" for i in range(10)]
    path = tmp_path / "emb.csv"
    ea.save_embeddings(mat, ids, path)
    got_ids, got = ea.load_embeddings(path)
    assert got_ids == ids
    assert np.array_equal(got, mat)  # shortest round-trip repr is exact


def test_embeddings_empty_matrix_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    ea.save_embeddings(np.empty((0, 3)), [], path)
    assert path.read_text().strip() == "id,dim_0,dim_1,dim_2"
    ids, mat = ea.load_embeddings(path)
    assert ids == [] and mat.shape == (0, 3)


def test_embeddings_header_must_match(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("id,x,y\na,1,2\n")
    with pytest.raises(ValueError, match="dim_0"):
        ea.load_embeddings(path)


def test_labels_round_trip_and_validation(tmp_path):
    path = tmp_path / "labels.csv"
    save_labels(np.array([0, 1, 1]), ["a", "b", "c"], path)
    ids, labs = load_labels(path)
    assert ids == ["a", "b", "c"]
    assert np.array_equal(labs, [0, 1, 1])

    path.write_text("id,label\na,2\n")
    with pytest.raises(ValueError, match=r"label outside \{0,1\}"):
        load_labels(path)


def test_dataset_write_load_round_trip(tmp_path):
    ds = small_ds(n=9)
    manifest = ea.write_dataset(ds, tmp_path / "d")
    back = ea.load_dataset(manifest)
    assert back.sample_ids == ds.sample_ids
    assert back.modality_names == ds.modality_names
    assert np.array_equal(back.labels, ds.labels)
    for a, b in zip(back.modalities, ds.modalities):
        assert np.array_equal(a, b)


def test_loader_is_row_order_independent(tmp_path):
    ds = small_ds(n=8)
    manifest = ea.write_dataset(ds, tmp_path / "d")
    base = ea.load_dataset(manifest)

    # permute the rows of one modality file and of the label file
    m0 = (tmp_path / "d" / "m0.csv").read_text().splitlines()
    (tmp_path / "d" / "m0.csv").write_text(
        "\n".join([m0[0]] + m0[1:][::-1]) + "\n"
    )
    lab = (tmp_path / "d" / "labels.csv").read_text().splitlines()
    (tmp_path / "d" / "labels.csv").write_text(
        "\n".join([lab[0]] + lab[1:][::-1]) + "\n"
    )
    permuted = ea.load_dataset(manifest)
    assert permuted.sample_ids == base.sample_ids
    assert np.array_equal(permuted.labels, base.labels)
    for a, b in zip(permuted.modalities, base.modalities):
        assert np.array_equal(a, b)


def test_loader_rejects_missing_modality_rows(tmp_path):
    ds = small_ds(n=6)
    manifest = ea.write_dataset(ds, tmp_path / "d")
    m1 = (tmp_path / "d" / "m1.csv").read_text().splitlines()
    (tmp_path / "d" / "m1.csv").write_text("\n".join(m1[:-1]) + "\n")  # drop a row
    with pytest.raises(ValueError, match="id set does not match"):
        ea.load_dataset(manifest)


def test_loader_rejects_duplicate_ids(tmp_path):
    ds = small_ds(n=6)
    manifest = ea.write_dataset(ds, tmp_path / "d")
    m1 = (tmp_path / "d" / "m1.csv").read_text().splitlines()
    (tmp_path / "d" / "m1.csv").write_text("\n".join(m1 + [m1[-1]]) + "\n")
    with pytest.raises(ValueError, match="duplicate sample id"):
        ea.load_dataset(manifest)


def test_loader_rejects_missing_file(tmp_path):
    ds = small_ds(n=6)
    manifest = ea.write_dataset(ds, tmp_path / "d")
    (tmp_path / "d" / "m1.csv").unlink()
    with pytest.raises(FileNotFoundError):
        ea.load_dataset(manifest)


def test_write_dataset_refuses_nonempty_dir(tmp_path):
    ds = small_ds(n=6)
    out = tmp_path / "d"
    ea.write_dataset(ds, out)
    with pytest.raises(FileExistsError):
        ea.write_dataset(ds, out)
    ea.write_dataset(ds, out, force=True)  # explicit overwrite allowed


# --- synthetic generator -----------------------------------------------------


def test_generator_deterministic():
    spec = ea.SynthSpec(
        n_samples=30, n_modalities=2, dims=(7, 4), signal_dims=(2, 2),
        nonlinearity="xor-rotate", signal_offset=1.5, seed=9,
    )
    a = ea.generate_synthetic(spec)
    b = ea.generate_synthetic(spec)
    assert a.sample_ids == b.sample_ids
    assert np.array_equal(a.labels, b.labels)
    for ma, mb in zip(a.modalities, b.modalities):
        assert np.array_equal(ma, mb)
    assert dataset_fingerprint(a) == dataset_fingerprint(b)


def test_generator_seed_changes_data():
    spec = ea.SynthSpec(
        n_samples=30, n_modalities=1, dims=(6,), signal_dims=(2,), seed=1,
    )
    a = ea.generate_synthetic(spec)
    b = ea.generate_synthetic(ea.SynthSpec(**{**spec.__dict__, "seed": 2}))
    assert not np.array_equal(a.modalities[0], b.modalities[0])


def test_generator_noiseless_limit_separates_by_offset():
    # noise_sigma=0 allowed precisely for this exactness check
    spec = ea.SynthSpec(
        n_samples=200, n_modalities=1, dims=(4,), signal_dims=(3,),
        noise_sigma=0.0, nonlinearity="none", signal_offset=2.5, seed=4,
    )
    ds = ea.generate_synthetic(spec)
    m = np.asarray(ds.modalities[0])
    mean1 = m[ds.labels == 1, :3].mean(axis=0)
    mean0 = m[ds.labels == 0, :3].mean(axis=0)
    assert np.allclose(mean1 - mean0, 2.5, atol=1e-12)
    assert np.all(m[:, 3] == 0.0)  # pure noise block is silent at sigma 0


def test_generator_ids_zero_padded_sorted():
    ds = ea.generate_synthetic(
        ea.SynthSpec(n_samples=11, n_modalities=1, dims=(3,), signal_dims=(1,), seed=0)
    )
    assert ds.sample_ids[0] == "s00"
    assert ds.sample_ids[10] == "s10"
    assert list(ds.sample_ids) == sorted(ds.sample_ids)


def test_spec_validation():
    good = dict(n_samples=10, n_modalities=1, dims=(4,), signal_dims=(2,))
    ea.SynthSpec(**good).validate()
    with pytest.raises(ValueError):
        ea.SynthSpec(**{**good, "dims": (4, 4)}).validate()
    with pytest.raises(ValueError):
        ea.SynthSpec(**{**good, "signal_dims": (5,)}).validate()
    with pytest.raises(ValueError):
        ea.SynthSpec(**{**good, "class_balance": 1.0}).validate()
    with pytest.raises(ValueError):
        ea.SynthSpec(**{**good, "noise_sigma": -1.0}).validate()
    with pytest.raises(ValueError, match="even"):
        ea.SynthSpec(**{**good, "nonlinearity": "xor-rotate", "signal_dims": (3,)}).validate()


def test_xor_rotate_blind_to_linear_visible_to_trees():
    """Generator verification: the label is recoverable from the latent pair
    coordinates by a shallow tree but invisible to a linear model on the raw
    (rotated) features."""
    spec = ea.SynthSpec(
        n_samples=1200, n_modalities=1, dims=(32,), signal_dims=(2,),
        noise_sigma=1.0, nonlinearity="xor-rotate", signal_offset=2.0, seed=77,
    )
    ds, latents = ea.generate_synthetic(spec, return_latents=True)
    tr = np.arange(0, 900)
    te = np.arange(900, 1200)
    X = np.asarray(ds.modalities[0])

    linear = ea.make_classifier("logistic_regression")
    linear.fit(X[tr], ds.labels[tr])
    f1_linear = ea.f1_score(ds.labels[te], linear.predict(X[te]))

    lat = latents.signals[0]
    tree = ea.make_classifier("cart", max_depth=2, min_leaf=1)
    tree.fit(lat[tr], ds.labels[tr])
    f1_latent = ea.f1_score(ds.labels[te], tree.predict(lat[te]))

    assert f1_latent > 0.9
    assert f1_linear < 0.7  # chance-level: all-positive guessing gives ~2/3


def test_xor_rotate_population_covariance_isotropic():
    # at signal_offset = 2*sigma/... i.e. c == sigma the residual is zero and
    # every coordinate has unit variance; sample cov should be close to I
    spec = ea.SynthSpec(
        n_samples=4000, n_modalities=1, dims=(16,), signal_dims=(4,),
        noise_sigma=1.0, nonlinearity="xor-rotate", signal_offset=2.0, seed=3,
    )
    ds = ea.generate_synthetic(spec)
    cov = np.cov(np.asarray(ds.modalities[0]).T)
    assert np.abs(np.diag(cov) - 1.0).max() < 0.15
    off = cov - np.diag(np.diag(cov))
    assert np.abs(off).max() < 0.15


def test_fingerprint_sensitive_to_content():
    ds = small_ds(n=6)
    other = ea.MultimodalDataset(
        modality_names=ds.modality_names,
        modalities=(np.asarray(ds.modalities[0]) + 1e-12, ds.modalities[1]),
        labels=ds.labels,
        sample_ids=ds.sample_ids,
    )
    assert dataset_fingerprint(ds) != dataset_fingerprint(other)
