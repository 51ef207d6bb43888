"""
Unit tests for the key schedule (ensim/protocol/keyschedule.py).

Tests key generation, identifier derivation and the identifier wire codec.
"""

import pytest

from ensim.protocol.keyschedule import (
    DecodeError,
    EphemeralProximityIdentifier,
    KeySchedule,
    KeyScheduleError,
    TemporaryExposureKey,
    decode_epi,
    derive_day_identifiers,
    derive_epi,
    encode_epi,
    generate_tek,
)
from ensim.utils.rng import StreamFactory, StreamRole


class TestKeySchedule:
    """Test rotation settings."""

    def test_default_rotation(self):
        """Test the default schedule rotates every 10 minutes."""
        schedule = KeySchedule()

        assert schedule.rotation_minutes == 10
        assert schedule.intervals_per_day == 144

    @pytest.mark.parametrize("rotation,intervals", [
        (10, 144),
        (12, 120),
        (15, 96),
        (16, 90),
        (18, 80),
        (20, 72),
    ])
    def test_valid_rotations(self, rotation, intervals):
        """Test every allowed rotation period divides the day."""
        assert KeySchedule(rotation).intervals_per_day == intervals

    @pytest.mark.parametrize("rotation", [5, 9, 11, 14, 21, 30])
    def test_invalid_rotations(self, rotation):
        """Test rotation periods outside [10, 20] or not dividing 1440 are rejected."""
        with pytest.raises(KeyScheduleError):
            KeySchedule(rotation)

    def test_clock_helpers(self):
        """Test day and interval of a simulation minute."""
        schedule = KeySchedule(10)

        assert schedule.day_of(0) == 0
        assert schedule.day_of(1439) == 0
        assert schedule.day_of(1440) == 1
        assert schedule.interval_of(1440 + 25) == 2
        assert schedule.interval_of(1439) == 143


class TestTemporaryExposureKey:
    """Test TEK generation and validation."""

    def test_generate_tek_uses_stream(self):
        """Test a TEK takes 16 bytes from the owning stream, reproducibly."""
        first = generate_tek(StreamFactory(5).stream(StreamRole.DEVICE, 0), 3)
        second = generate_tek(StreamFactory(5).stream(StreamRole.DEVICE, 0), 3)

        assert first.day == 3
        assert len(first.key) == 16
        assert first == second

    def test_streams_give_different_keys(self):
        """Test two devices never share a key under the same seed."""
        factory = StreamFactory(5)
        a = generate_tek(factory.stream(StreamRole.DEVICE, 0), 0)
        b = generate_tek(factory.stream(StreamRole.DEVICE, 1), 0)

        assert a.key != b.key

    def test_keys_unique_across_devices(self):
        """Test 1000 device streams yield 1000 distinct keys for the same day."""
        factory = StreamFactory(5)
        keys = {generate_tek(factory.stream(StreamRole.DEVICE, i), 0).key for i in range(1000)}

        assert len(keys) == 1000

    def test_consecutive_days_differ(self):
        """Test one stream draws a fresh key for every day."""
        stream = StreamFactory(5).stream(StreamRole.DEVICE, 0)
        keys = [generate_tek(stream, day).key for day in range(14)]

        assert len(set(keys)) == 14

    def test_from_hex(self):
        """Test parsing a key from hex."""
        tek = TemporaryExposureKey.from_hex(4, '000102030405060708090a0b0c0d0e0f')

        assert tek.day == 4
        assert tek.key == bytes(range(16))
        assert tek.hex() == '000102030405060708090a0b0c0d0e0f'

    @pytest.mark.parametrize("day,key_hex", [
        (0, 'zz'),
        (0, '0011'),
        (-1, '00' * 16),
        ('1', '00' * 16),
    ])
    def test_invalid_keys(self, day, key_hex):
        """Test malformed keys are rejected."""
        with pytest.raises(KeyScheduleError):
            TemporaryExposureKey.from_hex(day, key_hex)

    def test_repr_hides_key(self):
        """Test the repr shows only a key prefix."""
        tek = TemporaryExposureKey(0, bytes(range(16)))

        assert tek.hex() not in repr(tek)


class TestDeriveEpi:
    """Test identifier derivation."""

    def test_golden_vectors(self, golden_vectors):
        """Test derivation matches the frozen vectors byte for byte."""
        for vector in golden_vectors:
            tek = TemporaryExposureKey.from_hex(vector['day'], vector['key_hex'])
            epi = derive_epi(tek, vector['interval'])

            assert epi.hex() == vector['epi_hex'], vector

    def test_derivation_is_deterministic(self, fixed_tek):
        """Test the same key and interval always give the same identifier."""
        assert derive_epi(fixed_tek, 7) == derive_epi(fixed_tek, 7)

    @pytest.mark.parametrize("interval", [-1, 144, 1000])
    def test_interval_out_of_range(self, fixed_tek, interval):
        """Test intervals outside the day are rejected."""
        with pytest.raises(KeyScheduleError):
            derive_epi(fixed_tek, interval)

    def test_interval_bound_follows_schedule(self, fixed_tek):
        """Test the interval bound depends on the rotation period."""
        schedule = KeySchedule(20)

        derive_epi(fixed_tek, 71, schedule)
        with pytest.raises(KeyScheduleError):
            derive_epi(fixed_tek, 72, schedule)

    def test_day_identifiers(self, fixed_tek):
        """Test a day yields one identifier per interval, in order."""
        identifiers = derive_day_identifiers(fixed_tek)

        assert len(identifiers) == 144
        assert identifiers[5] == derive_epi(fixed_tek, 5)

    @pytest.mark.slow
    def test_identifiers_unique_across_keys(self):
        """Test 100 keys yield 14,400 pairwise distinct identifiers."""
        stream = StreamFactory(2024).stream(StreamRole.DEVICE, 0)
        seen = set()
        for n in range(100):
            tek = generate_tek(stream, n % 30)
            seen.update(e.value for e in derive_day_identifiers(tek))

        assert len(seen) == 100 * 144


class TestEpiCodec:
    """Test the identifier wire format."""

    def test_encode_is_raw_bytes(self, fixed_tek):
        """Test the wire form is exactly the 16 identifier bytes."""
        epi = derive_epi(fixed_tek, 0)

        assert encode_epi(epi) == epi.value
        assert decode_epi(encode_epi(epi)) == epi

    @pytest.mark.parametrize("payload", [b'', b'\x00' * 15, b'\x00' * 17, 'not-bytes', None])
    def test_decode_rejects_bad_payloads(self, payload):
        """Test decoding rejects anything but 16 bytes."""
        with pytest.raises(DecodeError):
            decode_epi(payload)

    def test_epi_length_enforced(self):
        """Test identifiers must be 16 bytes."""
        with pytest.raises(KeyScheduleError):
            EphemeralProximityIdentifier(b'\x01' * 8)
