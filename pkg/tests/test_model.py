import time

import pytest
import torch

from glassbound.model import FBAM, IEBAM, AttentionBlock, GlassNet, ModelConfig, ToyBackbone

from oracles import central_difference


def rand(*shape, seed=0, dtype=torch.float32):
    return torch.randn(*shape, generator=torch.Generator().manual_seed(seed), dtype=dtype)


@pytest.mark.parametrize("size,os_,expected", [(512, 16, 32), (512, 8, 64), (96, 16, 6)])
def test_backbone_aspp_resolution(size, os_, expected):
    bb = ToyBackbone(output_stride=os_).eval()
    with torch.no_grad():
        pyr = bb(torch.zeros(1, 3, size, size))
    assert pyr.aspp.shape[-2:] == (expected, expected)
    assert pyr.layer1.shape[-1] == size // 4
    assert pyr.output_stride == os_


def test_backbone_rejects_indivisible_input():
    with pytest.raises(ValueError, match="divisible by 32"):
        ToyBackbone()(torch.zeros(1, 3, 100, 96))


def test_iebam_zero_inputs_give_zero_merged():
    m = IEBAM(8).eval()
    z = torch.zeros(1, 8, 6, 6)
    with torch.no_grad():
        out = m(z, z, z)
    assert torch.count_nonzero(out.f_m) == 0


def test_iebam_merge_is_exact_sum():
    m = IEBAM(8).eval()
    with torch.no_grad():
        out = m(rand(2, 8, 6, 6, seed=1), rand(2, 8, 12, 12, seed=2), rand(2, 8, 3, 3, seed=3))
    assert torch.equal(out.f_m, out.f_body + out.f_in)
    assert out.f_m.shape == out.f_b.shape == out.f_ex.shape == (2, 8, 12, 12)


def test_iebam_channel_mismatch():
    with pytest.raises(ValueError, match="channels"):
        IEBAM(8)(torch.zeros(1, 4, 6, 6), torch.zeros(1, 8, 6, 6), torch.zeros(1, 8, 6, 6))


def test_iebam_boundary_receptive_field():
    m = IEBAM(4).eval()
    conv = m.boundary_conv[0]
    radius = (conv.kernel_size[0] // 2) * conv.dilation[0]
    f_input, f_low, f_high = rand(1, 4, 9, 9, seed=4), rand(1, 4, 9, 9, seed=5), rand(1, 4, 9, 9, seed=6)
    p = (4, 4)
    outside = torch.ones(9, 9, dtype=torch.bool)
    outside[p[0] - radius:p[0] + radius + 1, p[1] - radius:p[1] + radius + 1] = False
    perturbed = f_input + 5.0 * outside * rand(1, 4, 9, 9, seed=7)
    inside = f_input.clone()
    inside[..., p[0], p[1] + radius] += 5.0
    with torch.no_grad():
        base = m(f_input, f_low, f_high).f_b[..., p[0], p[1]]
        far = m(perturbed, f_low, f_high).f_b[..., p[0], p[1]]
        near = m(inside, f_low, f_high).f_b[..., p[0], p[1]]
    assert torch.equal(base, far)
    assert not torch.equal(base, near)


def test_attention_rows_sum_to_one():
    blk = AttentionBlock(8, 8, reduction=2, heads=2)
    for size in (1, 3, 6, 16):
        with torch.no_grad():
            w = blk.weights(rand(2, 8, size, size, seed=size), rand(2, 8, size, size, seed=size + 1))
        assert torch.allclose(w.sum(-1), torch.ones(()), atol=1e-5)


def test_attention_chunked_matches_full(monkeypatch):
    blk = AttentionBlock(4, 4, reduction=2)
    with torch.no_grad():
        blk.gamma.fill_(0.8)
        q, c = rand(1, 4, 8, 8, seed=1), rand(1, 4, 8, 8, seed=2)
        full = blk(q, c)
        monkeypatch.setattr(AttentionBlock, "chunk", 5)
        chunked = blk(q, c)
    assert torch.allclose(full, chunked, atol=1e-6)


def _fbam_inputs(c=8, size=6, seed=0):
    return rand(2, c, size, size, seed=seed), rand(2, c, size, size, seed=seed + 1), rand(2, c, size, size, seed=seed + 2)


def test_fbam_zero_gate_is_mean_fusion():
    m = FBAM(8).eval()
    with torch.no_grad():
        m.gate.out.weight.zero_()
        m.gate.out.bias.zero_()
        f_in, f_ex, f_m = _fbam_inputs()
        out = m(f_in, f_ex, f_m)
        assert torch.all(out.alpha == 0.5)
        assert torch.equal(out.f_en, m.fuse(0.5 * f_in + 0.5 * f_ex))


def test_fbam_gamma_zero_is_identity():
    m = FBAM(8).eval()
    f_in, f_ex, f_m = _fbam_inputs(seed=3)
    with torch.no_grad():
        assert torch.equal(m(f_in, f_ex, f_m).refined_m, f_m)


def test_fbam_single_position_attention():
    m = FBAM(8).eval()
    f_in, f_ex, f_m = _fbam_inputs(size=1, seed=5)
    with torch.no_grad():
        m.attention.gamma.fill_(0.7)
        out = m(f_in, f_ex, f_m)
        expected = 0.7 * m.attention.value(f_m) + f_m
    assert torch.allclose(out.refined_m, expected, atol=1e-6)


def test_fbam_gate_range_and_complement():
    m = FBAM(8).train()
    for seed in range(5):
        out = m(*_fbam_inputs(seed=seed))
        a = out.alpha
        assert torch.all((a > 0) & (a < 1))
        assert torch.all(a + out.beta == 1.0)


def test_fbam_shape_mismatch():
    with pytest.raises(ValueError):
        FBAM(8)(torch.zeros(1, 8, 4, 4), torch.zeros(1, 8, 4, 4), torch.zeros(1, 8, 5, 5))


@pytest.mark.parametrize("mode,frozen", [("in_only", "f_ex"), ("ex_only", "f_in")])
def test_ablation_routing_ignores_other_band(mode, frozen):
    m = FBAM(8, mode=mode).eval()
    f_in, f_ex, f_m = _fbam_inputs(seed=9)
    with torch.no_grad():
        base = m(f_in, f_ex, f_m).f_en
        if frozen == "f_ex":
            other = m(f_in, f_ex + rand(*f_ex.shape, seed=11), f_m).f_en
        else:
            other = m(f_in + rand(*f_in.shape, seed=11), f_ex, f_m).f_en
    assert torch.equal(base, other)


def test_ablation_in_ex_with_zero_gate_is_mean():
    m = FBAM(8, mode="in_ex").eval()
    with torch.no_grad():
        m.gate.out.weight.zero_()
        m.gate.out.bias.zero_()
        f_in, f_ex, f_m = _fbam_inputs(seed=12)
        assert torch.equal(m(f_in, f_ex, f_m).f_en, m.fuse((f_in + f_ex) / 2))


def test_fbam_scaling_keeps_fusion_sign_pattern():
    f_in, f_ex, _ = _fbam_inputs(seed=14)
    for c in (0.1, 2.0, 37.0):
        assert torch.equal(torch.sign(0.5 * f_in + 0.5 * f_ex), torch.sign(0.5 * (c * f_in) + 0.5 * (c * f_ex)))


def test_fbam_gamma_gradient_depends_on_band_features():
    m = FBAM(8).train()
    with torch.no_grad():
        m.gate.out.weight.zero_()
        m.gate.out.bias.zero_()
    f_in, f_ex, f_m = _fbam_inputs(seed=15)

    def gamma_grad(ex):
        m.zero_grad()
        m(f_in, ex, f_m).p_m.pow(2).mean().backward()
        return m.attention.gamma.grad.clone()

    g1 = gamma_grad(f_ex)
    g2 = gamma_grad(f_ex + rand(*f_ex.shape, seed=16))
    assert g1.abs().item() > 0
    assert not torch.equal(g1, g2)
    assert m.fuse[0].weight.grad is not None


def _toy_cascade():
    torch.manual_seed(0)
    ie, fb = IEBAM(2).double().train(), FBAM(2).double().train()
    with torch.no_grad():
        for blk in (ie.internal.attention, ie.external.attention, fb.attention):
            blk.gamma.fill_(0.5)
    return ie, fb


def _cascade_loss(ie, fb, f_input, f_low, f_high):
    a = ie(f_input, f_low, f_high)
    b = fb(a.f_in, a.f_ex, a.f_m)
    return (a.p_b.sin().sum() + a.p_in.pow(2).mean() + a.p_ex.tanh().sum()
            + a.p_body.mean() + (b.p_m * torch.linspace(-1, 1, 6, dtype=torch.float64)).sum())


def test_cascade_gradients_match_central_differences():
    ie, fb = _toy_cascade()
    inputs = [rand(2, 2, 6, 6, seed=s, dtype=torch.float64) for s in (20, 21, 22)]
    leaves = [x.clone().requires_grad_(True) for x in inputs]
    _cascade_loss(ie, fb, *leaves).backward()
    for i, x in enumerate(inputs):
        def f(t, i=i):
            args = list(inputs)
            args[i] = t
            with torch.no_grad():
                return _cascade_loss(ie, fb, *args)
        numeric = central_difference(f, x.clone())
        err = (leaves[i].grad - numeric).abs().max() / numeric.abs().max()
        assert err < 1e-3, (i, float(err))


def test_network_output_shapes_512():
    m = GlassNet().eval()
    with torch.no_grad():
        ie, fb = m(torch.rand(1, 3, 512, 512))
    for t in (ie.p_b, ie.p_in, ie.p_ex, ie.p_body, fb.p_m):
        assert t.shape == (1, 1, 512, 512)


def test_network_eval_determinism_and_speed():
    m = GlassNet().eval()
    x = torch.rand(1, 3, 96, 96)
    with torch.no_grad():
        m(x)
        start = time.perf_counter()
        a = m(x)
        elapsed = time.perf_counter() - start
        b = m(x)
    assert elapsed < 1.0
    for u, v in zip((a[0].p_b, a[0].p_in, a[1].p_m), (b[0].p_b, b[0].p_in, b[1].p_m)):
        assert torch.equal(u, v)


def test_network_accepts_external_backbone():
    bb = ToyBackbone(widths=(8, 8, 16, 16), aspp_channels=16)
    m = GlassNet(ModelConfig(channels=8), backbone=bb).eval()
    with torch.no_grad():
        _, fb = m(torch.rand(1, 3, 64, 64))
    assert fb.p_m.shape == (1, 1, 64, 64)


def test_model_config_validation():
    with pytest.raises(ValueError):
        ModelConfig(ablation="both")
    with pytest.raises(ValueError):
        ModelConfig(output_stride=4)
