"""On-line training: backprop, update rules, and the run loop.

One iteration processes one sample. The canonical order is: forward
pass, error backpropagation, linear weight updates (plain weights, LUT
linear parts, biases), LUT entry updates, visit table updates, and
finally one gate draw per LUT connection that switches on decay of the
touched entries plus diffusion of the LUT and its visit table.

The error function is half the summed squared output error, so output
deltas are simply (y - d) times the tanh slope. Because LUTs are only
piecewise differentiable, the derivative carried through a LUT
connection is estimated by averaging symmetric difference quotients at
a geometric ladder of probe offsets.
"""
from __future__ import annotations

import math

import numpy as np

from .core import (
    ForwardTrace,
    LinearConnection,
    LutConnection,
    Network,
    find_nonfinite,
    forward_network,
    segment_coords,
)
from .hyper import Hyperparameters
from .regularize import (
    _assemble_pairs,
    _gain_decay,
    _pair_core,
    _update_visits_tensor,
    _visit_ratios,
)


class TrainingDiverged(RuntimeError):
    """Raised when a parameter or output stops being finite."""


def derivative_offsets(hp: Hyperparameters) -> np.ndarray:
    """Probe offsets a_l, a_l*a_m, a_l*a_m^2, ... up to the last one <= a_h.

    Always non-empty; one more a_m step past the last entry would
    exceed a_h.
    """
    out = []
    a = hp.a_l
    while True:
        out.append(a)
        if a * hp.a_m > hp.a_h:
            break
        a *= hp.a_m
    return np.asarray(out)


def _lut_slope_estimate(lut: np.ndarray, x: np.ndarray, offsets: np.ndarray,
                        hp: Hyperparameters, cols: np.ndarray | None = None) -> np.ndarray:
    """Averaged symmetric difference quotients of the LUT part.

    lut is (n_out, n_in, r) and x the per-column inputs (n_in,). Both
    probe points are clamped into the domain before reading; a probe
    pair whose clamped points coincide carries no slope information and
    is skipped from the average (zero if every pair degenerates).
    """
    k = offsets.shape[0]
    probes = np.empty((2 * k, x.shape[0]))
    np.add(x, offsets[:, None], out=probes[:k])
    np.subtract(x, offsets[:, None], out=probes[k:])
    np.maximum(probes, hp.i_min, out=probes)
    np.minimum(probes, hp.i_max, out=probes)
    den = probes[:k] - probes[k:]
    lo, frac = segment_coords(probes, hp)
    if cols is None:
        cols = np.arange(lut.shape[1])
    v_lo = lut[:, cols, lo]                                   # (n_out, 2k, n_in)
    v_hi = lut[:, cols, lo + 1]
    reads = (1.0 - frac) * v_lo + frac * v_hi
    diff = reads[:, :k] - reads[:, k:]
    if den.min() > 0.0:
        diff /= den
        return diff.mean(axis=1)
    good = den > 0.0
    diff /= np.where(good, den, 1.0)
    diff *= good
    count = good.sum(axis=0)
    return diff.sum(axis=1) / np.maximum(count, 1)


def approx_lut_derivative(conn: LutConnection, x: float, hp: Hyperparameters,
                          offsets: np.ndarray | None = None) -> float:
    """Estimated derivative of a LUT connection's weight function at x."""
    if offsets is None:
        offsets = derivative_offsets(hp)
    est = _lut_slope_estimate(conn.lut.reshape(1, 1, -1),
                              np.asarray([x], dtype=float), offsets, hp)
    return float(conn.linear + est[0, 0])


def backprop(net: Network, trace: ForwardTrace, target,
             offsets: np.ndarray | None = None) -> list[np.ndarray]:
    """Per-node error deltas for every non-input layer.

    Every connection into node k carries the error e_i = delta[k] of
    its destination, so the returned list (indexed like net.layers)
    determines all connection errors. Output deltas are
    (y - d) * (1 - y^2); hidden deltas accumulate each downstream
    connection's error times its estimated weight-function derivative.
    """
    target = np.asarray(target, dtype=float)
    if target.shape != (net.n_outputs,):
        raise ValueError(f"expected {net.n_outputs} target values, got shape {target.shape}")
    if offsets is None:
        offsets = derivative_offsets(net.hp)
    layers = trace.layers
    y = layers[-1].activations
    delta = (y - target) * (1.0 - y * y)
    deltas = [np.empty(0)] * len(net.layers)
    deltas[-1] = delta
    for li in range(len(net.layers) - 1, 0, -1):
        lay = net.layers[li]
        if lay.lut is not None:
            dodi = lay.w + _lut_slope_estimate(lay.lut, layers[li].inputs,
                                               offsets, net.hp, lay.cols)
        else:
            dodi = lay.w
        back = (delta[:, None] * dodi).sum(axis=0)
        y_prev = layers[li - 1].activations
        delta = back * (1.0 - y_prev * y_prev)
        deltas[li - 1] = delta
    return deltas


# ---------------------------------------------------------------------------
# Update rules (single-connection forms)

def update_linear(conn: LinearConnection, e: float, x: float,
                  hp: Hyperparameters) -> float:
    """New scalar weight after one gain-shaped step and decay."""
    dw = -float(_gain_decay(np.float64(conn.weight), np.float64(hp.mu * e * x), hp))
    return (1.0 - hp.s_b) * (conn.weight + dw)


def update_linear_component(conn: LutConnection, e: float, x: float,
                            hp: Hyperparameters) -> float:
    """New linear part of a LUT connection; the step is boosted by nu."""
    dw = -float(_gain_decay(np.float64(conn.linear), np.float64(hp.mu * e * x), hp))
    return (1.0 - hp.s_b) * (conn.linear + hp.nu * dw)


def _lut_entry_updates(lut_value, e, frac, hp: Hyperparameters):
    """Deltas for the two entries bracketing the traversed segment.

    The raw step is gain-shaped against the interpolated value itself
    (no input factor). Splitting by s/(2s^2-2s+1) on each side makes the
    interpolated value at the traversed point move by exactly the raw
    step, and sends everything to a single entry when the position sits
    on a grid point.
    """
    dwr = -_gain_decay(lut_value, hp.mu * e, hp)
    den = 2.0 * frac * frac - 2.0 * frac + 1.0
    return dwr * ((1.0 - frac) / den), dwr * (frac / den)


def update_lut_component(conn: LutConnection, e: float, x: float,
                         hp: Hyperparameters, gate: bool) -> np.ndarray:
    """Update the (at most two) LUT entries addressed by input x, in place.

    With the gate on, the touched entries are additionally decayed.
    Returns the connection's LUT for convenience.
    """
    lo, frac = segment_coords(float(x), hp)
    rv = (1.0 - frac) * conn.lut[lo] + frac * conn.lut[lo + 1]
    d_lo, d_hi = _lut_entry_updates(rv, e, frac, hp)
    conn.lut[lo] += d_lo
    conn.lut[lo + 1] += d_hi
    if gate:
        if frac < 1.0:
            conn.lut[lo] *= 1.0 - hp.s_b
        if frac > 0.0:
            conn.lut[lo + 1] *= 1.0 - hp.s_b
    return conn.lut


# ---------------------------------------------------------------------------
# One full iteration

def _apply_iteration(net: Network, x, target, gate_u: np.ndarray,
                     offsets: np.ndarray) -> float:
    """Forward, backprop, and all updates for one sample.

    gate_u supplies one uniform draw per LUT connection in layer-major,
    destination-major, source-major order. Returns the sample's mean
    squared output error (from the pre-update forward pass).
    """
    hp = net.hp
    y, trace = forward_network(net, x)
    target = np.asarray(target, dtype=float)
    deltas = backprop(net, trace, target, offsets)
    err = y - target
    sq_err = float(err @ err) / err.shape[0]

    used = 0
    for lay, tr, delta in zip(net.layers, trace.layers, deltas):
        inp = tr.inputs
        grad = hp.mu * delta[:, None] * inp
        dw = -_gain_decay(lay.w, grad, hp)
        db = -_gain_decay(lay.bias, hp.mu * delta, hp)
        if lay.lut is None:
            lay.w += dw
        else:
            lay.w += hp.nu * dw
        lay.w *= 1.0 - hp.s_b
        lay.bias += db
        lay.bias *= 1.0 - hp.s_b
        if lay.lut is None:
            continue

        lo, frac = tr.seg_lo, tr.seg_frac
        cols = lay.cols
        d_lo, d_hi = _lut_entry_updates(tr.lut_values, delta[:, None], frac, hp)
        lay.lut[:, cols, lo] += d_lo
        lay.lut[:, cols, lo + 1] += d_hi

        _update_visits_tensor(lay.visits, lo, frac, hp, cols)

        n = lay.n_out * lay.n_in
        rows, gcols = np.nonzero(hp.zeta > gate_u[used:used + n].reshape(lay.n_out, lay.n_in))
        used += n
        if rows.size:
            fr = frac[gcols]
            jl = lo[gcols]
            lay.lut[rows, gcols, jl] *= np.where(fr < 1.0, 1.0 - hp.s_b, 1.0)
            lay.lut[rows, gcols, jl + 1] *= np.where(fr > 0.0, 1.0 - hp.s_b, 1.0)
            lvals = lay.lut[rows, gcols]
            vvals = lay.visits[rows, gcols]
            p, pinv = _visit_ratios(vvals)
            lay.lut[rows, gcols] = _assemble_pairs(
                *_pair_core(lvals, p, pinv, hp, smooth=True))
            new_vis = _assemble_pairs(*_pair_core(vvals, p, pinv, hp, smooth=False))
            np.maximum(new_vis, hp.v_min, out=new_vis)
            lay.visits[rows, gcols] = new_vis
    return sq_err


def train_iteration(net: Network, x, target, rng: np.random.Generator) -> float:
    """Present one sample and update the network in place.

    The generator is consumed for exactly one uniform per LUT connection
    (the regularization gates), drawn as a single layer-major block.
    Returns the sample's mean squared output error.
    """
    gate_u = rng.random(net.lut_connection_count())
    return _apply_iteration(net, x, target, gate_u, derivative_offsets(net.hp))


# ---------------------------------------------------------------------------
# Run loop

class Trainer:
    """Drives training over a dataset with reproducible sample order.

    The sample order is reshuffled at every epoch boundary by a
    generator keyed on (seed, epoch), so any position in the run can be
    reconstructed from the seed and the iteration counter alone. The
    gate generator is the only stateful stream; its state plus the
    iteration counter fully determine the rest of a run, which is what
    makes checkpoint resume bit-exact.
    """

    def __init__(self, net: Network, args: np.ndarray, vals: np.ndarray, seed: int):
        args = np.asarray(args, dtype=float)
        vals = np.asarray(vals, dtype=float)
        if len(args) == 0:
            raise ValueError("training set is empty")
        if args.shape[1] != net.n_inputs or vals.shape[1] != net.n_outputs:
            raise ValueError(
                f"dataset is {args.shape[1]} -> {vals.shape[1]} but the network is "
                f"{net.n_inputs} -> {net.n_outputs}")
        self.net = net
        self.args = args
        self.vals = vals
        self.seed = int(seed)
        self.iteration = 0
        self.gate_rng = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence([self.seed, 1])))
        self._offsets = derivative_offsets(net.hp)
        self._order = None
        self._order_epoch = -1

    def gate_state(self) -> dict:
        return self.gate_rng.bit_generator.state

    def restore(self, iteration: int, gate_state: dict) -> None:
        self.iteration = int(iteration)
        self.gate_rng.bit_generator.state = gate_state

    def _epoch_order(self, epoch: int) -> np.ndarray:
        if epoch != self._order_epoch:
            rng = np.random.Generator(np.random.PCG64(
                np.random.SeedSequence([self.seed, 2, epoch])))
            self._order = rng.permutation(len(self.args))
            self._order_epoch = epoch
        return self._order

    def run(self, iterations: int, log_every: int = 1000, on_log=None,
            checkpoint_every: int | None = None, on_checkpoint=None,
            stop_when=None) -> list[tuple[int, float]]:
        """Train for a number of iterations.

        on_log(trainer, window_mse) fires every log_every iterations
        with the mean per-sample error since the previous log point;
        on_checkpoint(trainer) fires every checkpoint_every iterations.
        stop_when(trainer), polled at log points, ends the run early.
        Returns the log rows as (iteration, window mse) pairs.
        """
        net = self.net
        n = len(self.args)
        n_gate = net.lut_connection_count()
        end = self.iteration + int(iterations)
        rows: list[tuple[int, float]] = []
        window_sum = 0.0
        window_n = 0
        while self.iteration < end:
            epoch, pos = divmod(self.iteration, n)
            order = self._epoch_order(epoch)
            block = min(end - self.iteration, n - pos)
            if log_every:
                next_log = log_every - self.iteration % log_every
                block = min(block, next_log)
            if checkpoint_every:
                next_ck = checkpoint_every - self.iteration % checkpoint_every
                block = min(block, next_ck)
            gate_u = self.gate_rng.random((block, n_gate))
            for b in range(block):
                idx = order[pos + b]
                err = _apply_iteration(net, self.args[idx], self.vals[idx],
                                       gate_u[b], self._offsets)
                window_sum += err
                window_n += 1
                if not math.isfinite(err):
                    self.iteration += b + 1
                    where = find_nonfinite(net) or "network outputs"
                    raise TrainingDiverged(
                        f"non-finite value in {where} at iteration {self.iteration}")
            self.iteration += block
            at_log = log_every and self.iteration % log_every == 0
            if at_log or self.iteration == end:
                bad = find_nonfinite(net)
                if bad is not None:
                    raise TrainingDiverged(
                        f"non-finite value in {bad} at iteration {self.iteration}")
            if at_log:
                rows.append((self.iteration, window_sum / max(window_n, 1)))
                if on_log is not None:
                    on_log(self, window_sum / max(window_n, 1))
                window_sum = 0.0
                window_n = 0
                if stop_when is not None and stop_when(self):
                    break
            if checkpoint_every and self.iteration % checkpoint_every == 0 \
                    and on_checkpoint is not None and self.iteration < end:
                on_checkpoint(self)
        if window_n and (not log_every or self.iteration % log_every != 0):
            rows.append((self.iteration, window_sum / window_n))
        return rows
