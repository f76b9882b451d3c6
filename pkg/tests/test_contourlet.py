import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from buscad.contourlet import (
    NAMED_SUBBAND_KEYS,
    contourlet_decompose,
    contourlet_reconstruct,
    dfb_decompose,
    dfb_reconstruct,
    lp_decompose,
    lp_reconstruct,
    pad_to_multiple,
    required_multiple,
    select_named_subbands,
)
from buscad.imagecore import ImageGrid


def rel_err(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.abs(a - b).max() / max(np.abs(b).max(), 1e-300))


def rand_grid(shape, seed=0):
    rng = np.random.default_rng(seed)
    return ImageGrid(rng.normal(size=shape), "coefficient")


class TestLaplacianPyramid:
    def test_round_trip(self):
        img = rand_grid((128, 128), 3)
        low, details = lp_decompose(img, levels=3)
        back = lp_reconstruct(low, details)
        assert rel_err(back.data, img.data) < 1e-12

    def test_level_shapes_halve(self):
        img = rand_grid((64, 64), 1)
        low, details = lp_decompose(img, levels=2)
        assert details[0].shape == (64, 64)
        assert details[1].shape == (32, 32)
        assert low.shape == (16, 16)

    def test_haar_variant_round_trip(self):
        img = rand_grid((32, 32), 9)
        low, details = lp_decompose(img, levels=1, filters="haar")
        back = lp_reconstruct(low, details, filters="haar")
        assert rel_err(back.data, img.data) < 1e-12

    def test_constant_image_has_no_detail(self):
        img = ImageGrid(np.full((64, 64), 7.0), "coefficient")
        low, details = lp_decompose(img, levels=3)
        assert max(float(np.abs(d.data).max()) for d in details) < 1e-9
        assert float(np.ptp(low.data)) < 1e-9

    def test_impulse_energy_splits_with_orthogonal_filters(self):
        data = np.zeros((64, 64))
        data[32, 32] = 1.0
        low, details = lp_decompose(ImageGrid(data, "coefficient"), 2, filters="haar")
        e_in = float((data**2).sum())
        e_low = float((low.data**2).sum())
        e_det = sum(float((d.data**2).sum()) for d in details)
        assert abs(e_det - (e_in - e_low)) < 1e-9


class TestDirectionalFilterBank:
    @pytest.mark.parametrize("directions", [2, 4, 8, 16, 32])
    def test_perfect_reconstruction(self, directions):
        img = rand_grid((64, 64), directions)
        bands = dfb_decompose(img, directions)
        assert len(bands) == directions
        back = dfb_reconstruct(bands)
        assert rel_err(back.data, img.data) < 1e-12

    @pytest.mark.parametrize("directions", [2, 4, 8, 16, 32])
    def test_critical_sampling(self, directions):
        img = rand_grid((64, 64), 5)
        bands = dfb_decompose(img, directions)
        total = sum(b.data.size for b in bands)
        assert total == img.data.size

    def test_band_dims_reject_odd(self):
        with pytest.raises(ValueError):
            dfb_decompose(rand_grid((63, 64)), 4)

    def test_oriented_energy_concentrates(self):
        # A sinusoid aimed at a wedge center should land mostly in that
        # wedge; angles on wedge boundaries split between neighbours.
        yy, xx = np.mgrid[0:128, 0:128].astype(float)
        dominant = []
        for angle_deg in (20, 55, 110, 160):
            t = np.deg2rad(angle_deg)
            wave = np.cos(2 * np.pi * 0.3 * (np.cos(t) * xx + np.sin(t) * yy))
            bands = dfb_decompose(ImageGrid(wave, "coefficient"), 8)
            energies = np.array([float((b.data**2).sum()) for b in bands])
            assert energies.max() / energies.sum() >= 0.6
            dominant.append(int(energies.argmax()))
        assert len(set(dominant)) == 4


class TestFullContourlet:
    def test_round_trip_256(self):
        img = rand_grid((256, 256), 11)
        dec = contourlet_decompose(img, (8, 8, 16, 32))
        back = contourlet_reconstruct(dec)
        assert back.shape == img.shape
        assert rel_err(back.data, img.data) < 1e-9

    @pytest.mark.parametrize("shape", [(224, 224), (200, 310), (130, 257)])
    def test_padding_shapes_crop_back(self, shape):
        img = rand_grid(shape, sum(shape))
        dec = contourlet_decompose(img, (8, 8, 16, 32))
        assert dec.original_shape == shape
        back = contourlet_reconstruct(dec)
        assert back.shape == shape
        assert rel_err(back.data, img.data) < 1e-9

    def test_required_multiple(self):
        assert required_multiple(4, (8, 8, 16, 32)) == 128

    def test_pad_to_multiple_bottom_right(self):
        arr = np.arange(6.0).reshape(2, 3)
        out = pad_to_multiple(arr, 4)
        assert out.shape == (4, 4)
        np.testing.assert_array_equal(out[:2, :3], arr)
        assert (out[2:, :] == 0).all() and (out[:, 3:] == 0).all()

    def test_band_counts_per_level(self):
        dec = contourlet_decompose(rand_grid((256, 256)), (8, 8, 16, 32))
        for level, count in ((1, 8), (2, 8), (3, 16), (4, 32)):
            assert len(dec.level_bands(level)) == count

    def test_rejects_unsupported_direction_count(self):
        with pytest.raises(ValueError, match="direction count"):
            contourlet_decompose(rand_grid((64, 64)), (8, 6))

    @settings(max_examples=10, deadline=None)
    @given(
        seed=st.integers(0, 10_000),
        levels=st.sampled_from([(4,), (8, 8), (4, 8, 16)]),
    )
    def test_round_trip_property(self, seed, levels):
        img = rand_grid((64, 64), seed)
        back = contourlet_reconstruct(contourlet_decompose(img, levels))
        assert rel_err(back.data, img.data) < 1e-9


class TestNamedSubbands:
    def test_keys_and_shapes_on_256(self):
        dec = contourlet_decompose(rand_grid((256, 256), 2), (8, 8, 16, 32))
        named = select_named_subbands(dec)
        assert tuple(named.keys()) == NAMED_SUBBAND_KEYS
        shapes = {k: named[k].shape for k in named.keys()}
        assert shapes == {
            "P2D4": (32, 64),
            "P2D8": (64, 32),
            "P3D8": (8, 32),
            "P3D16": (32, 8),
            "P4D16": (2, 16),
            "P4D32": (16, 2),
        }

    def test_selected_bands_are_largest_of_their_group(self):
        dec = contourlet_decompose(rand_grid((256, 256), 4), (8, 8, 16, 32))
        named = select_named_subbands(dec)
        for level, count, key_lo, key_hi in ((2, 8, "P2D4", "P2D8"), (3, 16, "P3D8", "P3D16")):
            bands = dec.level_bands(level)
            half = count // 2
            lo_sizes = [bands[d].data.size for d in range(half)]
            hi_sizes = [bands[d].data.size for d in range(half, count)]
            assert named[key_lo].data.size == max(lo_sizes)
            assert named[key_hi].data.size == max(hi_sizes)

    def test_requires_the_fixed_level_plan(self):
        dec = contourlet_decompose(rand_grid((128, 128), 5), (8, 8, 16))
        with pytest.raises(ValueError):
            select_named_subbands(dec)

    def test_reconstruction_unaffected_by_selection(self):
        img = rand_grid((256, 256), 6)
        dec = contourlet_decompose(img, (8, 8, 16, 32))
        select_named_subbands(dec)
        assert rel_err(contourlet_reconstruct(dec).data, img.data) < 1e-9
