import numpy as np
import pytest

import meshrect


def test_rigid_mesh_layout():
    m = meshrect.rigid_mesh(512, 384, 8, 6)
    assert m.shape == (9, 7, 2)
    assert m[0, 0].tolist() == [0.0, 0.0]
    assert m[8, 6].tolist() == [512.0, 384.0]
    assert m[1, 1].tolist() == pytest.approx([512 / 6, 384 / 8])


def test_identity_warp_is_exact():
    rng = np.random.default_rng(0)
    img = rng.random((48, 64, 3))
    out = meshrect.warp_to_rigid(img, meshrect.rigid_mesh(64, 48, 4, 3))
    assert np.abs(out - img).max() <= 1e-12


def test_energy_vanishes_at_rigid_configuration():
    img = meshrect.procedural_image(128, 96, 3)
    mask = np.ones((96, 128))
    rigid = meshrect.rigid_mesh(128, 96, 4, 3)
    e = meshrect.energy(img, mask, rigid, rigid, label=img)
    assert set(e) == {"boundary", "mesh_intra", "mesh_inter", "content_appearance", "content_perception", "total"}
    assert all(v <= 1e-9 for v in e.values())


def test_synthesized_triplet_round_trips():
    gt = meshrect.procedural_image(128, 96, 5)
    t = meshrect.synthesize(gt, seed=1, magnitude=8.0, u=4, v=3)
    assert t["input"].shape == gt.shape
    assert 0.0 < t["mask"].mean() < 1.0
    back = meshrect.warp_to_rigid(t["input"], t["mesh"])
    assert meshrect.psnr(back, gt) > 25.0


def test_rectangle_label_free_closes_boundary():
    gt = meshrect.procedural_image(128, 96, 7)
    t = meshrect.synthesize(gt, seed=2, magnitude=8.0, u=4, v=3)
    r = meshrect.rectangle(t["input"], t["mask"], u=4, v=3)
    assert r["image"].shape == gt.shape
    assert r["mesh"].shape == (5, 4, 2)
    cover = meshrect.warp_mask_to_rigid(t["mask"], r["mesh"]).mean()
    assert cover >= 0.97
    assert r["iterations"] > 0


def test_metrics():
    img = meshrect.procedural_image(64, 64, 1)
    assert meshrect.psnr(img, img) == 99.0
    assert meshrect.ssim(img, img) == pytest.approx(1.0)


def test_png_round_trip(tmp_path):
    img = meshrect.procedural_image(40, 30, 2)
    path = str(tmp_path / "x.png")
    meshrect.save_png(img, path)
    back = meshrect.load_png(path)
    assert np.abs(back - img).max() <= 0.5 / 255 + 1e-9


def test_errors_map_to_python_exceptions(tmp_path):
    with pytest.raises(OSError):
        meshrect.load_png(str(tmp_path / "missing.png"))
    with pytest.raises(ValueError):
        meshrect.rigid_mesh(512, 384, 0, 6)
    with pytest.raises(ValueError):
        meshrect.warp_to_rigid(np.zeros(5), meshrect.rigid_mesh(4, 4, 1, 1))
