import hashlib
import json
import os

import numpy as np
import pytest

from dtmix import read_nifti
from dtmix.cli import main
import dtmix.selfcheck as selfcheck_mod

from helpers import ball_volume, cube_volume, make_volume

from dtmix import write_nifti


@pytest.fixture(scope="session")
def dataset(tmp_path_factory):
    """Five small volumes plus a manifest; some pairs mix, some are skipped."""
    root = tmp_path_factory.mktemp("dataset")
    vols = {
        "ballA": (ball_volume(16, 4.2, vid="ballA"), 0),
        "ballB": (ball_volume(16, 4.8, vid="ballB"), 1),
        "ballC": (ball_volume(16, 5.4, vid="ballC"), 2),
        "ballD": (ball_volume(16, 6.0, vid="ballD"), 1),
        "cubeE": (cube_volume(16, 4, 12, vid="cubeE"), 0),
    }
    lines = ["path,label"]
    for name, (vol, label) in vols.items():
        write_nifti(str(root / f"{name}.nii"), vol)
        lines.append(f"{name}.nii,{label}")
    manifest = root / "manifest.csv"
    manifest.write_text("\n".join(lines) + "\n")
    return root, manifest


def tree_digest(root):
    out = {}
    for dirpath, _, files in os.walk(root):
        for name in files:
            full = os.path.join(dirpath, name)
            rel = os.path.relpath(full, root)
            out[rel] = hashlib.sha256(open(full, "rb").read()).hexdigest()
    return out


def test_version(capsys):
    assert main(["--version"]) == 0
    out = capsys.readouterr().out
    assert "dtmix 1.0.0" in out
    assert "record format v1" in out


def test_edt_command(dataset, tmp_path):
    root, _ = dataset
    out = tmp_path / "edt.nii.gz"
    rc = main(["edt", "--input", str(root / "ballB.nii"), "--output", str(out)])
    assert rc == 0
    src = read_nifti(str(root / "ballB.nii"))
    dist = read_nifti(str(out))
    assert dist.dims == src.dims
    assert np.array_equal(dist.data == 0.0, np.asarray(src.data) <= 0.0)


def test_edt_missing_input_is_usage_error(capsys):
    assert main(["edt", "--output", "x.nii"]) == 2


def test_edt_all_foreground_degenerate(tmp_path):
    v = make_volume((3, 3, 3), np.ones(27))
    p = tmp_path / "solid.nii"
    write_nifti(str(p), v)
    rc = main(["edt", "--input", str(p), "--output", str(tmp_path / "o.nii")])
    assert rc == 5


def test_edt_nonexistent_file_is_io_error(tmp_path):
    rc = main(["edt", "--input", str(tmp_path / "none.nii"),
               "--output", str(tmp_path / "o.nii")])
    assert rc == 3


def test_mix_identity_record(dataset, tmp_path, capsys):
    root, _ = dataset
    src = str(root / "ballB.nii")
    out_img = tmp_path / "mix.nii.gz"
    out_rec = tmp_path / "mix.json"
    rc = main(["mix", "--input-a", src, "--input-b", src,
               "--label-a", "1", "--label-b", "1", "--num-classes", "3",
               "--out-image", str(out_img), "--out-record", str(out_rec),
               "--t1", "1.0", "--t2", "2.0"])
    assert rc == 0
    rec = json.loads(out_rec.read_text())
    assert rec["label"] == [0.0, 1.0, 0.0]
    assert rec["id_a"] == "ballB" and rec["id_b"] == "ballB"
    assert rec["t1"] == 1.0 and rec["t2"] == 2.0


def test_mix_shape_mismatch_names_both_shapes(dataset, tmp_path, capsys):
    root, _ = dataset
    small = make_volume((4, 4, 4), np.zeros(64))
    p_small = tmp_path / "small.nii"
    write_nifti(str(p_small), small)
    rc = main(["mix", "--input-a", str(root / "ballA.nii"), "--input-b", str(p_small),
               "--label-a", "0", "--label-b", "1",
               "--out-image", str(tmp_path / "o.nii"),
               "--out-record", str(tmp_path / "o.json")])
    assert rc == 5
    err = capsys.readouterr().err
    assert "(16, 16, 16)" in err and "(4, 4, 4)" in err


def test_mix_constant_distance_pair_infeasible(tmp_path):
    # one-voxel-thick slab: every foreground voxel sits at distance 1
    data = np.zeros((3, 6, 6), np.float32)  # (z, y, x)
    data[1, :, :] = 1.0
    slab = make_volume((6, 6, 3), data.reshape(-1), vid="slab")
    p = tmp_path / "slab.nii"
    write_nifti(str(p), slab)
    rc = main(["mix", "--input-a", str(p), "--input-b", str(p),
               "--label-a", "0", "--label-b", "1",
               "--out-image", str(tmp_path / "o.nii"),
               "--out-record", str(tmp_path / "o.json")])
    assert rc == 4


def test_mix_requires_both_thresholds(dataset, tmp_path):
    root, _ = dataset
    src = str(root / "ballB.nii")
    rc = main(["mix", "--input-a", src, "--input-b", src,
               "--label-a", "0", "--label-b", "1",
               "--out-image", str(tmp_path / "o.nii"),
               "--out-record", str(tmp_path / "o.json"),
               "--t1", "1.0"])
    assert rc == 2


def _augment(manifest, out_dir, seed=11, pairs=8, workers=1, extra=()):
    return main(["augment", "--manifest", str(manifest), "--out-dir", str(out_dir),
                 "--seed", str(seed), "--pairs", str(pairs),
                 "--workers", str(workers), *extra])


def test_augment_two_runs_byte_identical(dataset, tmp_path):
    _, manifest = dataset
    d1, d2 = tmp_path / "run1", tmp_path / "run2"
    assert _augment(manifest, d1) == 0
    assert _augment(manifest, d2) == 0
    assert tree_digest(d1) == tree_digest(d2)
    records = (d1 / "records.jsonl").read_text().strip().split("\n")
    assert records
    indices = [json.loads(line)["pair_index"] for line in records]
    assert indices == sorted(indices)
    for line in records:
        rec = json.loads(line)
        assert rec["seed"] == 11
        assert abs(rec["alpha_a"] + rec["alpha_b"] - 1.0) <= 1e-12


def test_augment_workers_do_not_change_bytes(dataset, tmp_path):
    _, manifest = dataset
    d1, d8 = tmp_path / "w1", tmp_path / "w8"
    assert _augment(manifest, d1, workers=1) == 0
    assert _augment(manifest, d8, workers=8) == 0
    assert tree_digest(d1) == tree_digest(d8)


def test_augment_cross_class_labels_differ(dataset, tmp_path):
    root, manifest = dataset
    out = tmp_path / "cc"
    rc = _augment(manifest, out, seed=5, pairs=6, extra=("--pairing", "cross-class"))
    assert rc == 0
    import csv

    by_id = {}
    with open(manifest) as fh:
        for row in list(csv.reader(fh))[1:]:
            by_id[row[0].replace(".nii", "")] = int(row[1])
    for line in (out / "records.jsonl").read_text().strip().split("\n"):
        rec = json.loads(line)
        assert by_id[rec["id_a"]] != by_id[rec["id_b"]]


def test_augment_single_entry_manifest_usage_error(dataset, tmp_path):
    root, _ = dataset
    m = tmp_path / "single.csv"
    m.write_text(f"path,label\n{root}/ballA.nii,0\n")
    assert _augment(m, tmp_path / "out") == 2


def test_augment_cross_class_unsampleable_manifest(dataset, tmp_path, capsys):
    # two entries sharing one label: no cross-class partner ever exists
    root, _ = dataset
    m = tmp_path / "same.csv"
    m.write_text(f"path,label\n{root}/ballA.nii,1\n{root}/ballB.nii,1\n")
    rc = _augment(m, tmp_path / "out", pairs=3, extra=("--pairing", "cross-class"))
    assert rc == 4
    err = capsys.readouterr().err
    assert "no cross-class partner" in err


def test_augment_mixed_image_readable(dataset, tmp_path):
    _, manifest = dataset
    out = tmp_path / "aug"
    assert _augment(manifest, out, seed=3, pairs=4) == 0
    recs = [json.loads(l) for l in (out / "records.jsonl").read_text().strip().split("\n")]
    first = recs[0]
    img = read_nifti(str(out / f"mix_{first['pair_index']:06d}.nii.gz"))
    assert img.dims == (16, 16, 16)
    counts = first["counts"]
    assert first["p_a"] == counts["r1"] + counts["r3"]


def test_bench_small_grid_reports_oracle(capsys):
    rc = main(["bench", "--size", "8,8,8", "--iters", "2", "--seed", "4"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "oracle: ok" in out
    assert out.count("\n") >= 4  # header, per-iter rows, summary


def test_bench_zero_iters_usage_error():
    assert main(["bench", "--iters", "0"]) == 2


def test_bench_bad_size_usage_error():
    assert main(["bench", "--size", "8,8"]) == 2
    assert main(["bench", "--size", "a,b,c"]) == 2


def test_selfcheck_passes(capsys):
    assert main(["selfcheck"]) == 0
    out = capsys.readouterr().out
    for group in ("edt_oracle", "region_partition", "alpha_conservation",
                  "loss_gradient"):
        assert f"{group}: ok" in out


def test_selfcheck_corrupted_group_fails(capsys, monkeypatch):
    def broken():
        raise AssertionError("injected fault")

    monkeypatch.setitem(selfcheck_mod.GROUPS, "edt_oracle", broken)
    assert main(["selfcheck"]) == 1
    out = capsys.readouterr().out
    assert "edt_oracle: FAIL" in out
