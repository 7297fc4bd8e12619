"""SNR band partitions used by the soft-routing ensemble.

A band set covers the operating range -20..18 dB with Q contiguous closed
intervals in even-dB units. Frames whose SNR falls between two bands (odd dB
values inside a gap) route to the band below.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

from .errors import ConfigError, DataError

_DEFAULTS = {
    1: ((-20, 18),),
    2: ((-20, -2), (0, 18)),
    3: ((-20, -8), (-6, 2), (4, 18)),
    4: ((-20, -12), (-10, -2), (0, 8), (10, 18)),
    5: ((-20, -12), (-10, -6), (-4, 2), (4, 10), (12, 18)),
}


@dataclass(frozen=True)
class SnrBands:
    """An ordered set of closed SNR intervals [lo, hi] in dB."""

    bands: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        bands = tuple((float(lo), float(hi)) for lo, hi in self.bands)
        if not bands:
            raise ConfigError("band set must contain at least one band")
        for lo, hi in bands:
            if lo > hi:
                raise ConfigError(f"band [{lo}, {hi}] has lo > hi")
        for (lo0, hi0), (lo1, hi1) in zip(bands, bands[1:]):
            if lo1 <= hi0:
                raise ConfigError(
                    f"bands [{lo0}, {hi0}] and [{lo1}, {hi1}] overlap or are unordered"
                )
        object.__setattr__(self, "bands", bands)

    def __len__(self) -> int:
        return len(self.bands)

    def __iter__(self):
        return iter(self.bands)

    def __getitem__(self, i) -> Tuple[float, float]:
        return self.bands[i]

    @property
    def lo(self) -> float:
        return self.bands[0][0]

    @property
    def hi(self) -> float:
        return self.bands[-1][1]

    def index_of(self, snr_db: float) -> int:
        """Band index for an SNR value.

        Values inside a band map to it; values in the gap between two bands
        map to the lower band; values outside [lo, hi] raise DataError.
        """
        if not self.lo <= snr_db <= self.hi:
            raise DataError(
                f"snr {snr_db} dB outside the covered range [{self.lo}, {self.hi}]"
            )
        # Last band whose lower edge is <= snr; this sends gap values downward.
        idx = 0
        for i, (lo, _) in enumerate(self.bands):
            if lo <= snr_db:
                idx = i
        return idx

    def indices(self, snrs_db: Sequence[float]):
        return [self.index_of(s) for s in snrs_db]


def default_bands(q: int) -> SnrBands:
    """The standard Q-way partition of -20..18 dB."""
    if q not in _DEFAULTS:
        raise ConfigError(f"no default band set for q={q}; supported: 1..5")
    return SnrBands(bands=_DEFAULTS[q])


def snr_band_index(snr_db: float, bands: SnrBands) -> int:
    """Functional alias for SnrBands.index_of."""
    return bands.index_of(snr_db)
