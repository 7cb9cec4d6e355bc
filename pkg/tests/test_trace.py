"""Trace generation statistics and container round-trips."""

import struct
from fractions import Fraction

import numpy as np
import pytest

from srcsim.trace import (
    FrameCtrl,
    SpikingTrace,
    TraceMeta,
    binarize,
    export_coe,
    generate_spt,
    import_coe,
    parse_spt,
    serialize_spt,
)


def _random_trace(rng, pixels=23, active=30, reset=3):
    img = (rng.random(pixels) < 0.5).astype(np.uint8) * 255
    return generate_spt(img, int(rng.integers(0, 10)), n_active=active,
                        n_reset=reset, seed=int(rng.integers(0, 2**63)))


# ============================================================
# binarize and generation
# ============================================================


def test_binarize_threshold_and_flattening():
    img = np.zeros((28, 28), dtype=np.uint8)
    img[0, 1] = 127
    img[0, 2] = 128
    img[27, 27] = 255
    v = binarize(img)
    assert v.shape == (784,)
    assert v[1] == 0 and v[2] == 1 and v[783] == 1
    assert v.sum() == 2


def test_generation_is_deterministic():
    img = np.full(50, 255, np.uint8)
    a = generate_spt(img, 3, seed=99)
    b = generate_spt(img, 3, seed=99)
    assert a == b
    c = generate_spt(img, 3, seed=100)
    assert c != a


def test_dark_image_produces_silent_trace():
    tr = generate_spt(np.zeros(64, np.uint8), 0, n_active=50, seed=1)
    assert tr.frames.sum() == 0


def test_off_pixels_never_fire():
    img = np.zeros(40, np.uint8)
    img[::2] = 255
    tr = generate_spt(img, 5, n_active=300, seed=2)
    assert tr.frames[:, 1::2].sum() == 0
    assert tr.frames[:, ::2].sum() > 0


def test_refractory_no_consecutive_fires():
    img = np.full(30, 255, np.uint8)
    tr = generate_spt(img, 1, n_active=400, p_max=Fraction(3, 4), seed=3)
    assert not np.any(tr.frames[1:] & tr.frames[:-1])


def test_p_one_pixel_alternates():
    tr = generate_spt(np.array([255], np.uint8), 0, n_active=10, n_reset=2,
                      p_max=Fraction(1), seed=4)
    assert tr.frames[2:, 0].tolist() == [1, 0, 1, 0, 1, 0, 1, 0, 1, 0]


def test_ctrl_bit_pattern():
    tr = generate_spt(np.full(8, 255, np.uint8), 7, n_active=5, n_reset=3, seed=0)
    assert [c.u_reset for c in tr.ctrl] == [1, 1, 1, 0, 0, 0, 0, 0]
    assert [c.u_cmp for c in tr.ctrl] == [0] * 7 + [1]
    assert all(c.cmp_val == 7 for c in tr.ctrl)
    assert tr.frames[:3].sum() == 0
    assert tr.label == 7


def test_per_pixel_probability_override():
    probs = np.array([0.0, 0.9])
    tr = generate_spt(np.array([255, 255], np.uint8), 0, n_active=200,
                      pixel_probs=probs, seed=5)
    assert tr.frames[:, 0].sum() == 0
    assert tr.frames[:, 1].sum() > 50


@pytest.mark.parametrize("kwargs", [
    dict(label=10), dict(label=-1),
    dict(p_max=Fraction(0)), dict(p_max=Fraction(5, 4)),
    dict(n_active=0),
])
def test_generation_rejects_bad_arguments(kwargs):
    args = dict(label=0)
    args.update(kwargs)
    with pytest.raises(ValueError):
        generate_spt(np.ones(4, np.uint8), **args)


def test_firing_rate_matches_renewal_recursion():
    # one always-ON pixel: q[t] = p*(1-q[t-1]); compare the empirical mean
    # count against the exact recursion with a 3-sigma allowance from the
    # stationary two-state chain variance pi*(1-pi)*(1-p)/(1+p).
    p, n_frames, n_traces = 0.25, 200, 2000
    q, expected = 0.0, 0.0
    for _ in range(n_frames):
        q = p * (1.0 - q)
        expected += q
    total = 0
    img = np.array([255], np.uint8)
    for s in range(n_traces):
        total += int(generate_spt(img, 0, n_active=n_frames, n_reset=0,
                                  seed=s).frames.sum())
    pi = p / (1 + p)
    sigma_counts = np.sqrt(pi * (1 - pi) * (1 - p) / (1 + p) * n_frames * n_traces)
    assert abs(total - n_traces * expected) <= 3 * sigma_counts


# ============================================================
# binary container
# ============================================================


@pytest.mark.parametrize("pixels,active,reset", [(1, 5, 0), (23, 30, 3), (784, 20, 4)])
def test_spt_roundtrip(tmp_path, pixels, active, reset):
    rng = np.random.default_rng(pixels)
    tr = _random_trace(rng, pixels, active, reset)
    path = tmp_path / "t.spt"
    serialize_spt(tr, str(path))
    assert parse_spt(str(path)) == tr


def test_spt_header_layout(tmp_path):
    tr = generate_spt(np.full(784, 255, np.uint8), 9, n_active=7, n_reset=2, seed=0xDEADBEEF)
    path = tmp_path / "t.spt"
    serialize_spt(tr, str(path))
    blob = path.read_bytes()
    magic, fc, pc, rf, seed, label = struct.unpack_from("<4sIIIQB", blob)
    assert (magic, fc, pc, rf, seed, label) == (b"SPT1", 9, 784, 2, 0xDEADBEEF, 9)
    assert len(blob) == 25 + 9 * 99  # ceil(790/8) bytes per frame


def test_spt_pixel_bit_is_lsb_first(tmp_path):
    frames = np.zeros((1, 8), np.uint8)
    frames[0, 0] = 1
    frames[0, 3] = 1
    tr = SpikingTrace(frames, [FrameCtrl(0, 1, 0)], seed=0, meta=TraceMeta(0, 1))
    path = tmp_path / "t.spt"
    serialize_spt(tr, str(path))
    body = path.read_bytes()[25:]
    assert body[0] == 0b00001001  # pixels 0 and 3
    assert body[1] == 0b00000010  # bit 9 = u_cmp


@pytest.mark.parametrize("blob,msg", [
    (b"", "bad magic"),
    (b"NOPE" + b"\x00" * 40, "bad magic"),
    (b"SPT1" + b"\x00" * 10, "malformed header"),
    (struct.pack("<4sIIIQB", b"SPT1", 0, 4, 0, 0, 0), "empty trace"),
    (struct.pack("<4sIIIQB", b"SPT1", 2, 4, 3, 0, 0), "malformed header"),
    (struct.pack("<4sIIIQB", b"SPT1", 2, 4, 0, 0, 0) + b"\x00", "truncated frame"),
])
def test_spt_parse_errors(tmp_path, blob, msg):
    path = tmp_path / "bad.spt"
    path.write_bytes(blob)
    with pytest.raises(ValueError, match=msg):
        parse_spt(str(path))


def test_spt_label_mismatch_detected(tmp_path):
    tr = generate_spt(np.full(8, 255, np.uint8), 4, n_active=3, seed=0)
    path = tmp_path / "t.spt"
    serialize_spt(tr, str(path))
    blob = bytearray(path.read_bytes())
    blob[24] = 5  # header label no longer matches the cmp_val bits
    path.write_bytes(bytes(blob))
    with pytest.raises(ValueError, match="label mismatch"):
        parse_spt(str(path))


def test_spt_bad_cmp_val_detected(tmp_path):
    frames = np.zeros((1, 2), np.uint8)
    tr = SpikingTrace(frames, [FrameCtrl(0, 1, 15)], seed=0, meta=TraceMeta(0, 1))
    path = tmp_path / "t.spt"
    serialize_spt(tr, str(path))
    blob = bytearray(path.read_bytes())
    blob[24] = 15
    path.write_bytes(bytes(blob))
    with pytest.raises(ValueError, match="bad label"):
        parse_spt(str(path))


def test_serialize_empty_trace_rejected(tmp_path):
    tr = SpikingTrace(np.zeros((0, 4), np.uint8), [], seed=0, meta=TraceMeta(0, 0))
    with pytest.raises(ValueError, match="empty trace"):
        serialize_spt(tr, str(tmp_path / "t.spt"))


# ============================================================
# COE text form
# ============================================================


def test_coe_format_and_word_layout(tmp_path):
    tr = generate_spt(np.full(784, 255, np.uint8), 9, n_active=3, n_reset=1, seed=12)
    path = tmp_path / "t.coe"
    export_coe(tr, str(path))
    lines = path.read_text().splitlines()
    assert lines[0].startswith("; spt frames=4 pixels=784 reset=1 seed=12 label=9 p=1/4")
    assert lines[1] == "memory_initialization_radix=2;"
    assert lines[2] == "memory_initialization_vector="
    words = lines[3:]
    assert len(words) == 4
    assert all(len(w) == 791 for w in words)  # 790 bits + separator
    assert all(w.endswith(",") for w in words[:-1]) and words[-1].endswith(";")
    # cmp_val=9 sits in the top four bits, palindromic 1001 reads the same
    assert words[-1][:4] == "1001"
    assert words[0][4] == "0" and words[0][5] == "1"  # u_cmp clear, u_reset set


def test_coe_single_frame_trace(tmp_path):
    tr = SpikingTrace(np.zeros((1, 784), np.uint8), [FrameCtrl(0, 1, 0)],
                      seed=0, meta=TraceMeta(0, 1))
    path = tmp_path / "one.coe"
    export_coe(tr, str(path))
    word = path.read_text().splitlines()[3]
    assert len(word.rstrip(";")) == 790
    assert word.rstrip(";").count("1") == 1  # only the u_cmp bit
    assert word[790 - 785 - 1] == "1"  # bit 785 counted from the left end


@pytest.mark.parametrize("pixels", [5, 784])
def test_coe_roundtrip_lossless(tmp_path, pixels):
    rng = np.random.default_rng(pixels + 1)
    tr = _random_trace(rng, pixels)
    path = tmp_path / "t.coe"
    export_coe(tr, str(path))
    back = import_coe(str(path))
    assert back == tr
    assert back.meta.p_max == tr.meta.p_max


def test_coe_import_errors(tmp_path):
    p = tmp_path / "bad.coe"
    p.write_text("memory_initialization_radix=10;\nmemory_initialization_vector=\n01;\n")
    with pytest.raises(ValueError, match="unsupported radix"):
        import_coe(str(p))
    p.write_text("memory_initialization_radix=2;\nmemory_initialization_vector=\n01,\n0;\n")
    with pytest.raises(ValueError, match="malformed word"):
        import_coe(str(p))
    p.write_text("memory_initialization_radix=2;\nmemory_initialization_vector=\n")
    with pytest.raises(ValueError, match="empty trace"):
        import_coe(str(p))
