import numpy as np
import pytest

from jade import (
    ArrayConfig,
    FadingModel,
    PathParam,
    ValidationError,
    generate_pulse,
    load_dataset,
    save_dataset,
    steering_vector,
    synthesize,
)

from test_pulse import zero_bit_cfg


@pytest.fixture(scope="module")
def pulse_wave():
    return generate_pulse(zero_bit_cfg())


def one_path_snaps(pulse, angle_deg=0.0, delay=0.0, sensors=8, snapshots=1):
    return synthesize(
        pulse,
        [PathParam(angle_deg=angle_deg, delay=delay)],
        ArrayConfig(num_sensors=sensors, spacing=0.5),
        FadingModel.deterministic(1.0),
        snapshots,
        0.0,
        seed=0,
    )


class TestSteeringVector:
    def test_broadside_all_ones(self):
        v = steering_vector(ArrayConfig(6, 0.5), 0.0)
        assert np.allclose(v, np.ones(6), atol=1e-15)

    def test_endfire_alternates(self):
        v = steering_vector(ArrayConfig(6, 0.5), 90.0)
        expected = np.array([(-1.0 + 0j) ** k for k in range(6)])
        assert np.allclose(v, expected, atol=1e-12)

    def test_second_element_at_20_degrees(self):
        # Frozen oracle: exp(j*pi*sin(20 deg)); sin(20 deg) double-checked
        # below by an independent Taylor-series evaluation.
        x = np.radians(20.0)
        series, term, k = 0.0, x, 0
        while abs(term) > 1e-20:
            series += term
            k += 1
            term *= -x * x / ((2 * k) * (2 * k + 1))
        assert series == pytest.approx(0.3420201433256687, abs=1e-15)

        v = steering_vector(ArrayConfig(4, 0.5), 20.0)
        assert v[1] == pytest.approx(0.47618255771067436 + 0.8793464457948984j, abs=1e-12)

    def test_spacing_warning_above_half(self):
        with pytest.warns(UserWarning, match="alias"):
            steering_vector(ArrayConfig(4, 0.7), 10.0)

    def test_validation(self):
        with pytest.raises(ValidationError):
            steering_vector(ArrayConfig(1, 0.5), 0.0)
        with pytest.raises(ValidationError):
            steering_vector(ArrayConfig(4, 0.0), 0.0)


class TestSynthesize:
    def test_identity_channel(self, pulse_wave):
        snaps = one_path_snaps(pulse_wave)
        for k in range(snaps.num_sensors):
            err = np.abs(snaps.data[0, k] - pulse_wave.values).max()
            assert err < 1e-12 * np.abs(pulse_wave.values).max()

    def test_integer_delay_is_circular_shift(self, pulse_wave):
        snaps = one_path_snaps(pulse_wave, delay=5.0)
        expected = np.roll(pulse_wave.values, 5)
        err = np.abs(snaps.data[0, 0] - expected).max()
        assert err < 1e-10 * np.abs(pulse_wave.values).max()

    def test_fractional_delay_matches_frequency_domain(self, pulse_wave):
        snaps = one_path_snaps(pulse_wave, delay=2.5)
        n = len(pulse_wave)
        q = np.arange(n)
        omega = np.where(q <= n // 2, 2 * np.pi * q / n, 2 * np.pi * q / n - 2 * np.pi)
        expected = np.fft.ifft(np.fft.fft(pulse_wave.values) * np.exp(-1j * omega * 2.5))
        assert np.abs(snaps.data[0, 0] - expected).max() < 1e-12

    def test_steering_applied_per_sensor(self, pulse_wave):
        snaps = one_path_snaps(pulse_wave, angle_deg=20.0, sensors=4)
        v = steering_vector(ArrayConfig(4, 0.5), 20.0)
        for k in range(4):
            assert np.allclose(snaps.data[0, k], v[k] * pulse_wave.values, atol=1e-12)

    def test_spectra_match_data(self, pulse_wave):
        snaps = synthesize(
            pulse_wave,
            [PathParam(-10.0, 3.0), PathParam(20.0, 7.0)],
            ArrayConfig(8, 0.5),
            FadingModel.rayleigh(1.0),
            5,
            0.1,
            seed=2,
        )
        ref = np.fft.fft(snaps.data, axis=-1)
        err = np.abs(snaps.spectra - ref).max() / np.abs(ref).max()
        assert err < 1e-10

    def test_reproducible_and_prefix_stable(self, pulse_wave):
        kw = dict(
            paths=[PathParam(-10.0, 3.0), PathParam(20.0, 7.0)],
            arr=ArrayConfig(4, 0.5),
            fading=FadingModel.rayleigh(1.0),
            noise_var=0.05,
        )
        a = synthesize(pulse_wave, num_snapshots=8, seed=11, **kw)
        b = synthesize(pulse_wave, num_snapshots=8, seed=11, **kw)
        assert np.array_equal(a.data, b.data)
        assert np.array_equal(a.betas, b.betas)
        # snapshot streams are keyed by (seed, snapshot): a shorter run is a
        # prefix of a longer one, so parallel generation cannot change results
        c = synthesize(pulse_wave, num_snapshots=4, seed=11, **kw)
        assert np.array_equal(c.data, a.data[:4])

    def test_truth_retained(self, pulse_wave):
        snaps = one_path_snaps(pulse_wave, angle_deg=5.0, delay=1.0, snapshots=3)
        assert snaps.betas.shape == (3, 1)
        assert snaps.paths[0].angle_deg == 5.0
        assert np.allclose(snaps.betas, 1.0)

    def test_sensor_power_closed_form(self, pulse_wave):
        # Monte-Carlo mean power per sensor against the independence-based
        # closed form E|beta|^2 * sum_i (sum_n |g(t - tau_i)|^2) / N. Integer
        # delays keep the shifted pulse real so the per-path energy equals
        # the undelayed pulse energy.
        n = len(pulse_wave)
        energy = np.sum(pulse_wave.values**2)
        closed = 2.0 * (energy + energy) / n
        total, chunks, s_per = 0.0, 4, 2500
        for c in range(chunks):
            snaps = synthesize(
                pulse_wave,
                [PathParam(-10.0, 3.0), PathParam(20.0, 7.0)],
                ArrayConfig(8, 0.5),
                FadingModel.rayleigh(1.0),
                s_per,
                0.0,
                seed=100 + c,
            )
            total += np.mean(np.abs(snaps.data) ** 2)
        assert total / chunks == pytest.approx(closed, rel=0.02)

    def test_validation(self, pulse_wave):
        arr = ArrayConfig(4, 0.5)
        fading = FadingModel.rayleigh(1.0)
        with pytest.raises(ValidationError):
            synthesize(pulse_wave, [], arr, fading, 1)
        with pytest.raises(ValidationError):
            synthesize(pulse_wave, [PathParam(0.0, 0.0)], arr, fading, 0)
        with pytest.raises(ValidationError):
            synthesize(pulse_wave, [PathParam(0.0, 0.0)], arr, fading, 1, noise_var=-1.0)
        with pytest.raises(ValidationError):
            synthesize(pulse_wave, [PathParam(0.0, 100.0)], arr, fading, 1)
        with pytest.raises(ValidationError):
            synthesize(pulse_wave, [PathParam(95.0, 0.0)], arr, fading, 1)


class TestFadingModel:
    def test_rayleigh_moments(self):
        rng = np.random.default_rng(0)
        b = FadingModel.rayleigh(1.0).draw(rng, 100_000)
        assert abs(b.mean()) < 0.02
        assert np.mean(np.abs(b) ** 2) == pytest.approx(2.0, rel=0.02)

    def test_rician_moments_and_k_factor(self):
        fm = FadingModel.rician_from_k(5.0)
        assert fm.nu**2 / (2 * fm.sigma**2) == pytest.approx(5.0)
        rng = np.random.default_rng(1)
        b = fm.draw(rng, 100_000)
        assert abs(b.mean()) < 0.02
        assert np.mean(np.abs(b) ** 2) == pytest.approx(fm.mean_square(), rel=0.02)

    def test_suzuki_moments(self):
        fm = FadingModel.suzuki(sigma=1.0, mean_db=0.0, std_db=6.0)
        rng = np.random.default_rng(2)
        b = fm.draw(rng, 100_000)
        assert abs(b.mean()) < 0.02
        # heavier tails than Rayleigh: give the sample mean a looser 5%
        assert np.mean(np.abs(b) ** 2) == pytest.approx(fm.mean_square(), rel=0.05)

    def test_cross_path_independence(self):
        rng = np.random.default_rng(3)
        fm = FadingModel.rayleigh(1.0)
        b1 = fm.draw(rng, 100_000)
        b2 = fm.draw(rng, 100_000)
        assert abs(np.mean(b1 * np.conj(b2))) < 0.02

    def test_deterministic(self):
        rng = np.random.default_rng(4)
        b = FadingModel.deterministic(0.5 - 0.25j).draw(rng, 10)
        assert np.all(b == 0.5 - 0.25j)

    def test_validation(self):
        with pytest.raises(ValidationError):
            FadingModel.rayleigh(0.0).validate()
        with pytest.raises(ValidationError):
            FadingModel.rician(nu=-1.0, sigma=1.0).validate()
        with pytest.raises(ValidationError):
            FadingModel(kind="nakagami").validate()


class TestDatasetIO:
    def test_round_trip(self, pulse_wave, tmp_path):
        snaps = synthesize(
            pulse_wave,
            [PathParam(-10.0, 3.0), PathParam(20.0, 7.0)],
            ArrayConfig(4, 0.5),
            FadingModel.rayleigh(1.0),
            3,
            0.01,
            seed=5,
        )
        path = tmp_path / "data.txt"
        save_dataset(snaps, path)
        loaded = load_dataset(path)
        assert loaded.data.shape == snaps.data.shape
        assert np.array_equal(loaded.data, snaps.data)  # repr-exact round trip
        assert loaded.array.num_sensors == 4
        assert loaded.array.spacing == 0.5
        assert loaded.paths is None
        ref = np.fft.fft(loaded.data, axis=-1)
        assert np.abs(loaded.spectra - ref).max() < 1e-10 * np.abs(ref).max()

    def test_header_format(self, pulse_wave, tmp_path):
        snaps = one_path_snaps(pulse_wave, sensors=3, snapshots=2)
        path = tmp_path / "data.txt"
        save_dataset(snaps, path)
        header = path.read_text().splitlines()[0]
        assert header.startswith("JADE1 ")
        assert "M=3" in header and "N=128" in header and "S=2" in header and "delta=0.5" in header

    def test_rejects_bad_header(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("NOPE M=2 N=4 S=1 delta=0.5\n1:0,2:0,3:0,4:0\n")
        with pytest.raises(ValidationError):
            load_dataset(path)

    def test_rejects_truncated_file(self, pulse_wave, tmp_path):
        snaps = one_path_snaps(pulse_wave, sensors=3, snapshots=2)
        path = tmp_path / "data.txt"
        save_dataset(snaps, path)
        lines = path.read_text().splitlines()
        (tmp_path / "cut.txt").write_text("\n".join(lines[:-2]) + "\n")
        with pytest.raises(ValidationError):
            load_dataset(tmp_path / "cut.txt")
