"""BPSK-AWGN Monte-Carlo harness.

Frames are drawn, systematically encoded, transmitted over the simulated
channel, decoded with the compiled engine, and scored on information bits.
Every batch derives its RNG stream from (seed, point index, batch index)
and batches are consumed strictly in index order, so aggregate counts are
reproducible for any worker count, and byte-identical CSV output only
excludes the wall-clock throughput column.
"""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .compiler import NodeRuleSet, build_tree, compile_tree, estimate_latency
from .engine import execute
from .polar import encode_systematic
from .quantize import quantize_channel


def ebno_to_sigma2(ebno_db, rate):
    """Noise variance for a given Eb/N0 in dB at code rate k/N."""
    if not 0 < rate <= 1:
        raise ValueError(f"rate must be in (0, 1], got {rate}")
    return 1.0 / (2.0 * rate * 10.0 ** (ebno_db / 10.0))


def awgn_bpsk_llr(x, sigma, rng):
    """Modulate bits to +-1, add white Gaussian noise, return channel LLRs.

    LLR_i = 2 y_i / sigma^2 with y = (1 - 2 x) + n, n ~ N(0, sigma^2).
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    x = np.asarray(x)
    y = (1.0 - 2.0 * x) + sigma * rng.standard_normal(x.shape)
    return 2.0 * y / (sigma * sigma)


@dataclass
class SimConfig:
    """One Monte-Carlo run: code, engine setup, SNR sweep, and stop rules."""

    spec: object
    ebno_db: tuple
    p: int = 256
    rules: NodeRuleSet = field(default_factory=NodeRuleSet)
    quant: object = None
    seed: int = 0
    min_frame_errors: int = 100
    max_frames: int = 10_000_000
    workers: int = 1
    batch_size: int = 128

    def __post_init__(self):
        self.ebno_db = tuple(float(e) for e in self.ebno_db)
        if not self.ebno_db:
            raise ValueError("ebno_db list must not be empty")
        if self.min_frame_errors < 1:
            raise ValueError("min_frame_errors must be >= 1")
        if self.max_frames < 1 or self.batch_size < 1:
            raise ValueError("max_frames and batch_size must be >= 1")
        if self.spec.k == 0:
            raise ValueError("cannot simulate a code with no information bits")


@dataclass(frozen=True)
class SimResult:
    ebno_db: float
    sigma2: float
    frames: int
    bit_errors: int
    frame_errors: int
    ber: float
    fer: float
    info_throughput_bps: float
    cycles_per_frame: int
    elapsed_s: float


def run_simulation(config):
    """Simulate every configured Eb/N0 point; returns a list of SimResult.

    Each point stops at min_frame_errors frame errors or max_frames frames,
    whichever comes first, evaluated on whole batches.
    """
    spec = config.spec
    program = compile_tree(build_tree(spec, config.p, config.rules))
    cycles = estimate_latency(program)
    rate = spec.k / spec.N
    results = []
    pool = None
    try:
        if config.workers > 1:
            pool = ProcessPoolExecutor(
                max_workers=config.workers,
                initializer=_init_worker,
                initargs=(program, config.quant),
            )
        for point_idx, ebno in enumerate(config.ebno_db):
            sigma2 = ebno_to_sigma2(ebno, rate)
            t0 = time.perf_counter()
            frames, bit_err, frame_err = _run_point(
                program, config, point_idx, float(np.sqrt(sigma2)), pool
            )
            elapsed = time.perf_counter() - t0
            results.append(
                SimResult(
                    ebno_db=ebno,
                    sigma2=sigma2,
                    frames=frames,
                    bit_errors=bit_err,
                    frame_errors=frame_err,
                    ber=bit_err / (spec.k * frames),
                    fer=frame_err / frames,
                    info_throughput_bps=spec.k * frames / elapsed if elapsed > 0 else 0.0,
                    cycles_per_frame=cycles,
                    elapsed_s=elapsed,
                )
            )
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    return results


def _run_point(program, config, point_idx, sigma, pool):
    frames = bit_err = frame_err = 0
    seed, batch, max_frames = config.seed, config.batch_size, config.max_frames
    if pool is None:
        b = 0
        while frame_err < config.min_frame_errors and frames < max_frames:
            size = min(batch, max_frames - frames)
            be, fe = _sim_batch(program, config.quant, (seed, point_idx, b), sigma, size)
            frames += size
            bit_err += be
            frame_err += fe
            b += 1
        return frames, bit_err, frame_err
    pending = {}
    next_submit = 0
    next_consume = 0
    depth = 2 * config.workers
    while True:
        while len(pending) < depth and next_submit * batch < max_frames:
            size = min(batch, max_frames - next_submit * batch)
            pending[next_submit] = pool.submit(
                _pool_task, (seed, point_idx, next_submit), sigma, size
            )
            next_submit += 1
        if next_consume not in pending:
            break
        be, fe = pending.pop(next_consume).result()
        size = min(batch, max_frames - next_consume * batch)
        frames += size
        bit_err += be
        frame_err += fe
        next_consume += 1
        if frame_err >= config.min_frame_errors or frames >= max_frames:
            break
    for fut in pending.values():
        fut.cancel()
    return frames, bit_err, frame_err


_WORK = {}


def _init_worker(program, quant):
    _WORK["program"] = program
    _WORK["quant"] = quant


def _pool_task(entropy, sigma, size):
    return _sim_batch(_WORK["program"], _WORK["quant"], entropy, sigma, size)


def _sim_batch(program, quant, entropy, sigma, size):
    """Decode one batch of random frames; returns (bit errors, frame errors)."""
    spec = program.spec
    rng = np.random.default_rng(np.random.SeedSequence(entropy))
    a = rng.integers(0, 2, size=(size, spec.k), dtype=np.uint8)
    x = encode_systematic(a, spec)
    llr = awgn_bpsk_llr(x, sigma, rng)
    if quant is not None:
        llr = quantize_channel(llr, quant)
    beta = execute(program, llr, quant)
    wrong = beta[:, spec.info_positions] != a
    return int(wrong.sum()), int(np.count_nonzero(wrong.any(axis=1)))


_CSV_COLUMNS = (
    "ebno_db",
    "sigma2",
    "frames",
    "bit_errors",
    "frame_errors",
    "ber",
    "fer",
    "info_throughput_bps",
    "cycles_per_frame",
)


def results_to_csv(results, include_throughput=True):
    """Render results as CSV text.

    The throughput column is wall-clock derived and therefore varies run to
    run; pass include_throughput=False for byte-reproducible output.
    """
    cols = [c for c in _CSV_COLUMNS if include_throughput or c != "info_throughput_bps"]
    lines = [",".join(cols)]
    for r in results:
        row = {
            "ebno_db": f"{r.ebno_db:.6g}",
            "sigma2": f"{r.sigma2:.10g}",
            "frames": str(r.frames),
            "bit_errors": str(r.bit_errors),
            "frame_errors": str(r.frame_errors),
            "ber": f"{r.ber:.8e}",
            "fer": f"{r.fer:.8e}",
            "info_throughput_bps": f"{r.info_throughput_bps:.6g}",
            "cycles_per_frame": str(r.cycles_per_frame),
        }
        lines.append(",".join(row[c] for c in cols))
    return "\n".join(lines) + "\n"


def bench(program, frames, quant=None, ebno_db=4.0, seed=0, batch_size=128):
    """Time repeated decoding of pre-generated noisy frames.

    Returns a dict with the measured wall time, information throughput, and
    the modeled cycle count per frame.  Frame generation is excluded from
    the timed region.  frames == 0 yields an empty report.
    """
    spec = program.spec
    cycles = estimate_latency(program)
    report = {
        "frames": int(frames),
        "elapsed_s": 0.0,
        "info_bps": 0.0,
        "cycles_per_frame": cycles,
    }
    if frames <= 0:
        return report
    rate = spec.k / spec.N
    sigma = float(np.sqrt(ebno_to_sigma2(ebno_db, rate)))
    rng = np.random.default_rng(np.random.SeedSequence((seed,)))
    a = rng.integers(0, 2, size=(frames, spec.k), dtype=np.uint8)
    llr = awgn_bpsk_llr(encode_systematic(a, spec), sigma, rng)
    if quant is not None:
        llr = quantize_channel(llr, quant)
    t0 = time.perf_counter()
    for off in range(0, frames, batch_size):
        execute(program, llr[off : off + batch_size], quant)
    elapsed = time.perf_counter() - t0
    report["elapsed_s"] = elapsed
    report["info_bps"] = spec.k * frames / elapsed if elapsed > 0 else 0.0
    return report
