import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image
from scipy import ndimage

from glassbound import maskops
from glassbound.maskops import (
    MaskError, batch_decompose, decompose, gaussian_kernel, read_f32, weight_map, weight_maps, write_f32,
)

from oracles import brute_decompose, direct_blur, gaussian_kernel_1px, random_blob

REGIONS = ("real_boundary", "internal", "external", "boundary", "body", "merged")


def square_16():
    m = np.zeros((16, 16), dtype=np.uint8)
    m[4:12, 4:12] = 1
    return m


def test_square_internal_covers_whole_square():
    reg = decompose(square_16(), 5, 5)
    assert reg.internal.sum() == 64
    assert reg.body.sum() == 0
    assert np.array_equal(reg.internal, square_16())
    expected = brute_decompose(square_16(), 5, 5)
    for name in REGIONS:
        assert np.array_equal(getattr(reg, name), expected[name]), name


def test_thickness_one_collapses_to_real_boundary():
    rng = np.random.default_rng(3)
    for _ in range(20):
        m = random_blob(rng, 20, 20)
        reg = decompose(m, 1, 1)
        for name in ("internal", "external", "boundary"):
            assert np.array_equal(getattr(reg, name), reg.real_boundary), name


def test_all_zero_mask_has_empty_regions():
    reg = decompose(np.zeros((8, 8), dtype=np.uint8), 5, 5)
    for name in REGIONS:
        assert getattr(reg, name).sum() == 0


def test_all_one_mask_has_no_boundary():
    reg = decompose(np.ones((8, 8), dtype=np.uint8), 3, 3)
    assert reg.real_boundary.sum() == 0
    assert reg.internal.sum() == 0
    assert reg.body.sum() == 64


def test_mask_touching_frame_has_no_boundary_on_frame():
    m = np.zeros((10, 10), dtype=np.uint8)
    m[:, :4] = 1
    reg = decompose(m, 2, 2)
    assert reg.real_boundary[:, 0].sum() == 0
    assert np.array_equal(np.nonzero(reg.real_boundary)[1], np.full(10, 3))


@pytest.mark.parametrize("t", [1, 2, 3, 5])
def test_matches_brute_force_oracle(t):
    rng = np.random.default_rng(t)
    for _ in range(25):
        h, w = rng.integers(1, 11, size=2)
        m = (rng.random((h, w)) < rng.uniform(0.2, 0.8)).astype(np.uint8)
        reg = decompose(m, t, t + 1)
        expected = brute_decompose(m, t, t + 1)
        for name in REGIONS:
            assert np.array_equal(getattr(reg, name), expected[name]), name


@pytest.mark.parametrize("t_in,t_ex", [(5, 5), (3, 7), (1, 4)])
def test_half_plane_band_thickness(t_in, t_ex):
    m = np.zeros((40, 40), dtype=np.uint8)
    m[:, :20] = 1
    reg = decompose(m, t_in, t_ex)
    row = 17
    assert reg.internal[row].sum() == t_in
    assert reg.external[row].sum() == t_ex
    assert (reg.internal[row] & reg.external[row]).sum() == 1
    assert reg.boundary[row].sum() == t_in + t_ex - 1


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), t_in=st.integers(1, 7), t_ex=st.integers(1, 7),
       h=st.integers(1, 30), w=st.integers(1, 30))
def test_region_invariants(seed, t_in, t_ex, h, w):
    m = random_blob(np.random.default_rng(seed), h, w)
    decompose(m, t_in, t_ex).check()


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), t=st.integers(1, 8))
def test_internal_monotone_in_thickness(seed, t):
    m = random_blob(np.random.default_rng(seed), 24, 24)
    small, big = decompose(m, t, 3).internal, decompose(m, t + 1, 3).internal
    assert not (small & ~big).any()


def test_rejects_non_binary_and_bad_thickness():
    with pytest.raises(MaskError):
        decompose(np.array([[0, 2], [1, 1]]))
    with pytest.raises(ValueError):
        decompose(square_16(), 0, 5)


def test_gaussian_kernel_normalised_and_matches_direct_formula():
    k = gaussian_kernel(3.0, 9)
    assert k.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(k, gaussian_kernel_1px(3.0, 9), rtol=1e-12)
    with pytest.raises(ValueError):
        gaussian_kernel(1.0, 4)


def test_weight_map_zero_inputs_is_all_ones():
    z = np.zeros((7, 9), dtype=np.uint8)
    assert np.array_equal(weight_map(z, z), np.ones((7, 9), dtype=np.float32))


def test_weight_map_single_pixel():
    z = np.zeros((9, 9), dtype=np.uint8)
    z[4, 4] = 1
    w = weight_map(z, z, sigma=1.0, kernel_size=5)
    centre = gaussian_kernel_1px(1.0, 5)[2, 2]
    expected = np.ones((9, 9))
    expected[4, 4] += centre
    np.testing.assert_allclose(w, expected, rtol=1e-6)


def test_weight_map_external_band_on_square_matches_direct_convolution():
    reg = decompose(square_16(), 5, 5)
    w = weight_map(reg.external, reg.boundary, sigma=3.0, kernel_size=9)
    oracle = reg.external * direct_blur(reg.boundary.astype(float), gaussian_kernel_1px(3.0, 9)) + 1
    np.testing.assert_allclose(w, oracle, rtol=1e-6)
    assert np.array_equal(w > 1, reg.external.astype(bool))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), k=st.sampled_from([3, 5, 9]))
def test_weight_map_floor_and_support(seed, k):
    reg = decompose(random_blob(np.random.default_rng(seed), 32, 32), 3, 3)
    for w in weight_maps(reg, sigma=2.0, kernel_size=k):
        assert w.min() >= 1.0
        near = ndimage.binary_dilation(reg.boundary, structure=np.ones((k, k)))
        assert np.all(w[~near] == 1.0)


def test_weight_map_shape_mismatch():
    with pytest.raises(MaskError, match="incompatible"):
        weight_map(np.zeros((3, 3)), np.zeros((4, 3)))


def test_f32_roundtrip_and_header(tmp_path):
    a = np.random.default_rng(0).random((5, 7)).astype(np.float32)
    path = tmp_path / "x.f32"
    write_f32(a, path)
    raw = path.read_bytes()
    assert raw[:8] == (5).to_bytes(4, "little") + (7).to_bytes(4, "little")
    assert len(raw) == 8 + 4 * 35
    assert np.array_equal(read_f32(path), a)


def _save(path, arr):
    Image.fromarray(arr.astype(np.uint8), mode="L").save(path)


def test_batch_decompose_writes_layout(tmp_path):
    src, out = tmp_path / "masks", tmp_path / "out"
    src.mkdir()
    rng = np.random.default_rng(0)
    for i in range(3):
        _save(src / f"m{i}.png", random_blob(rng, 24, 24) * 255)
    summary = batch_decompose(src, out, 5, 5, 3.0, 9)
    assert summary.processed == 3 and not summary.errors
    assert len(list(out.glob("*.png"))) == 15
    assert len(list(out.glob("*.f32"))) == 6
    m0 = maskops.read_mask_png(src / "m0.png")
    reg = decompose(m0, 5, 5)
    assert np.array_equal(maskops.read_mask_png(out / "m0.ex.png"), reg.external)
    w_in, _ = weight_maps(reg, 3.0, 9)
    assert np.array_equal(read_f32(out / "m0.win.f32"), w_in)


def test_batch_decompose_empty_dir(tmp_path):
    (tmp_path / "masks").mkdir()
    assert batch_decompose(tmp_path / "masks", tmp_path / "out").processed == 0


def test_batch_decompose_records_non_binary(tmp_path):
    src = tmp_path / "masks"
    src.mkdir()
    _save(src / "grey.png", np.arange(64).reshape(8, 8) * 3)
    summary = batch_decompose(src, tmp_path / "out")
    assert summary.processed == 0
    assert list(summary.errors) == ["grey.png"]
