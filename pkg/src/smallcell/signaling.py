"""Gain exchange through paired power levels.

Each link announces its per-tone direct gain without any feedback payload: it
broadcasts one reference burst at full power P0 and a second burst at
P0 * f(g), where f is a public monotone map from quantized gain levels into
(0, 1].  Any listener recovers f(g) as the received power ratio of the two
bursts; the unknown cross-channel attenuation cancels in the ratio, and a
table lookup inverts f.

One signaling slot is divided into sub-slots, one transmitting link per
sub-slot, so a slot needs at least as many sub-slots as links.
"""

from dataclasses import dataclass
import numpy as np


@dataclass(frozen=True)
class QuantizationTable:
    """Public gain codebook: sorted levels and their f values in (0, 1]."""

    gain_levels: np.ndarray   # strictly increasing, 1/mW
    f_values: np.ndarray      # strictly increasing, in (0, 1]

    @property
    def size(self) -> int:
        return len(self.gain_levels)

    def quantize(self, g: float) -> float:
        """Smallest level at or above g, clamped to the extremes."""
        idx = int(np.searchsorted(self.gain_levels, g, side="left"))
        return float(self.gain_levels[min(idx, self.size - 1)])

    def save(self, path):
        # two-column text dump for inspection
        np.savetxt(path, np.column_stack([self.gain_levels, self.f_values]),
                   header="gain_level f_value")


@dataclass(frozen=True)
class SignalPair:
    """Two received burst powers from one sender on one tone."""

    s1: float   # reference burst, mW
    s2: float   # scaled burst, mW
    tone: int = 0
    sender: int = 0


@dataclass
class GainView:
    """What one receiver decoded about everybody's direct gains.

    gains[i, k] is the decoded (quantized) direct gain of link i on tone k;
    missing[i, k] marks erased broadcasts.  Downstream consumers treat a
    missing entry as gain zero, i.e. a tone not worth claiming.
    """

    receiver: int
    gains: np.ndarray     # (I, K), 1/mW
    missing: np.ndarray   # (I, K), bool

    def effective_gains(self) -> np.ndarray:
        return np.where(self.missing, 0.0, self.gains)


def build_cdf_table(gain_samples, num_levels: int) -> QuantizationTable:
    """Build the codebook from the empirical gain distribution.

    Levels sit at the empirical quantiles j/M for j = 1..M, and f maps level j
    to j/M.  Sample sets too coarse to give M distinct levels raise.
    """
    if num_levels < 2:
        raise ValueError("need at least two quantization levels")
    samples = np.asarray(gain_samples, dtype=float)
    if samples.size == 0:
        raise ValueError("empty sample set")
    probs = np.arange(1, num_levels + 1) / num_levels
    levels = np.quantile(samples, probs)
    if np.any(np.diff(levels) <= 0.0):
        raise ValueError("duplicate quantization levels, need more distinct samples")
    return QuantizationTable(gain_levels=levels, f_values=probs)


def encode(g: float, table: QuantizationTable, p0_mw: float):
    """Transmit powers (reference, scaled) announcing gain g."""
    if p0_mw <= 0.0:
        raise ValueError("reference power must be positive")
    level = table.quantize(g)
    idx = int(np.searchsorted(table.gain_levels, level))
    return p0_mw, p0_mw * float(table.f_values[idx])


def decode(sig: SignalPair, table: QuantizationTable, ratio_tol: float = 0.1) -> float:
    """Recover the announced gain level from a received pair.

    The power ratio s2/s1 equals f(level) regardless of the propagation
    gain; the nearest table entry in f-space wins.  Ratios outside
    (0, 1 + ratio_tol] cannot come from a valid pair and raise.
    """
    if sig.s1 <= 0.0 or sig.s2 <= 0.0:
        raise ValueError("received powers must be positive")
    ratio = sig.s2 / sig.s1
    if ratio > 1.0 + ratio_tol:
        raise ValueError(f"malformed signal pair, ratio {ratio:.4g} outside (0, {1 + ratio_tol:.2f}]")
    idx = int(np.argmin(np.abs(table.f_values - ratio)))
    return float(table.gain_levels[idx])


def run_signaling_slot(realization, table: QuantizationTable, p0_mw: float,
                       p_loss: float = 0.0, rng=None, loss_mask=None,
                       num_subslots=None):
    """Simulate one full signaling slot and return every receiver's view.

    Links broadcast sequentially in index order.  Receiver j hears sender i on
    tone k through cross_gain[i, j, k]; the decoded value is the sender's
    quantized direct gain whenever the broadcast gets through.

    Losses: either pass an explicit (I, I, K) boolean loss_mask (True =
    erased), or a probability p_loss for independent per-(sender, receiver,
    tone) erasures drawn from rng.  The mask form lets callers hold losses
    fixed across slots to model persistent propagation failures.
    """
    I, K = realization.num_links, realization.num_tones
    if num_subslots is None:
        num_subslots = I
    if num_subslots < I:
        raise ValueError(f"{num_subslots} sub-slots cannot carry {I} sequential broadcasts")

    if loss_mask is None:
        if p_loss < 0.0 or p_loss > 1.0:
            raise ValueError("p_loss must be in [0, 1]")
        if p_loss > 0.0:
            if rng is None:
                raise ValueError("p_loss > 0 needs an rng")
            loss_mask = rng.random((I, I, K)) < p_loss
        else:
            loss_mask = np.zeros((I, I, K), dtype=bool)
    else:
        loss_mask = np.asarray(loss_mask, dtype=bool)

    views = []
    for j in range(I):
        gains = np.zeros((I, K))
        missing = np.ones((I, K), dtype=bool)
        for i in range(I):
            for k in range(K):
                if loss_mask[i, j, k]:
                    continue
                h = realization.cross_gain[i, j, k]
                tx1, tx2 = encode(realization.direct_gain[i, k], table, p0_mw)
                sig = SignalPair(s1=h * tx1, s2=h * tx2, tone=k, sender=i)
                gains[i, k] = decode(sig, table)
                missing[i, k] = False
        views.append(GainView(receiver=j, gains=gains, missing=missing))
    return views
