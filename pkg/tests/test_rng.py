import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stqp_goe import _kernels as _k
from stqp_goe.rng import GENERATOR, SeedSpec, derive_stream

# Random123 known-answer vectors for philox4x32-10: (counter, key) -> output
PHILOX_KAT = [
    ((0, 0, 0, 0), (0, 0), (0x6627E8D5, 0xE169C58D, 0xBC57AC4C, 0x9B00DBD8)),
    ((0xFFFFFFFF,) * 4, (0xFFFFFFFF, 0xFFFFFFFF), (0x408F276D, 0x41C83B0E, 0xA20BC7C6, 0x6D5451FD)),
    ((0x243F6A88, 0x85A308D3, 0x13198A2E, 0x03707344), (0xA4093822, 0x299F31D0),
     (0xD16CFE09, 0x94FDCCEB, 0x5001E420, 0x24126EA1)),
]


@pytest.mark.parametrize("ctr,key,expected", PHILOX_KAT)
def test_philox_known_answers(ctr, key, expected):
    words = _k.philox4x32(*(np.uint64(c) for c in ctr), np.uint64(key[0]), np.uint64(key[1]))
    assert tuple(int(w) for w in words) == expected


def test_generator_name():
    assert GENERATOR == "philox4x32-10"


def test_draw_layout():
    seed, index = 2**40 + 5, 2**33 + 9
    w = _k.philox4x32(np.uint64(index & 0xFFFFFFFF), np.uint64(index >> 32), np.uint64(1), np.uint64(0),
                      np.uint64(seed & 0xFFFFFFFF), np.uint64(seed >> 32))
    w = [int(x) for x in w]
    even = (((w[1] << 32) | w[0]) >> 11) + 0.5
    odd = (((w[3] << 32) | w[2]) >> 11) + 0.5
    u = derive_stream(seed, index).uniforms(2, start=2)
    assert u[0] == even * 2.0**-53 and u[1] == odd * 2.0**-53


def test_deterministic():
    a = derive_stream(7, 3).uniforms(50)
    b = derive_stream(7, 3).uniforms(50)
    assert np.array_equal(a, b)


def test_start_offset_is_a_window():
    full = derive_stream(1, 1).uniforms(20)
    assert np.array_equal(full[7:], derive_stream(1, 1).uniforms(13, start=7))


def test_neighbouring_streams_distinct():
    a = derive_stream(7, 0).uniforms(100)
    b = derive_stream(7, 1).uniforms(100)
    assert len(set(a) | set(b)) == 200


def test_stream_keys_unique():
    keys = {derive_stream(7, k).key for k in range(10**6)}
    assert len(keys) == 10**6


def test_open_interval_and_moments():
    u = derive_stream(123, 0).uniforms(200_000)
    assert u.min() > 0 and u.max() < 1
    assert abs(u.mean() - 0.5) < 4 * np.sqrt(1 / 12 / u.size)
    assert abs(u.var() - 1 / 12) < 0.002


@pytest.mark.parametrize("seed,index", [(-1, 0), (0, -1), (2**64, 0)])
def test_rejects_out_of_range(seed, index):
    with pytest.raises(ValueError):
        derive_stream(seed, index)


def test_rejects_non_integer():
    with pytest.raises(TypeError):
        derive_stream(1.5, 0)


@given(st.integers(0, 2**64 - 1), st.integers(0, 2**64 - 1))
def test_key_packs_both_words(seed, index):
    spec = derive_stream(seed, index)
    assert isinstance(spec, SeedSpec)
    assert spec.key >> 64 == seed and spec.key & (2**64 - 1) == index
