"""Batched interpreter for compiled decoder programs.

The engine is a behavioral model of the hardware datapath: per-stage alpha
buffers hold soft values, per-stage beta buffers hold the left and right
child decisions, and instructions read and write whole stage buffers.  All
buffers carry a leading frame axis, so one pass decodes a batch.  Resource
limits (P) never change values here; they only matter to the latency
estimate and the optional debug check on modeled memory accesses.
"""

import numpy as np

from .compiler import Opcode
from .kernels import combine_op, decode_ml4, decode_rep, decode_rep_spc, decode_spc, f_op, g_op, hd_op
from .polar import bit_reverse_permutation, extract_info


class EngineError(RuntimeError):
    """Execution failure, tagged with the offending program counter."""

    def __init__(self, message, pc=None):
        super().__init__(f"instruction {pc}: {message}" if pc is not None else message)
        self.pc = pc


def execute(program, channel_llrs, quant=None, debug=False):
    """Run a program over channel LLRs; returns the codeword estimate.

    Parameters
    ----------
    program : Program
    channel_llrs : array_like, shape (..., N)
        Floats, or already-quantized integers when quant is given.
    quant : QuantScheme, optional
        Selects the saturating fixed-point domain.
    debug : bool
        Additionally assert that no instruction reads more than 2P soft
        values per modeled cycle.

    Returns
    -------
    ndarray of uint8, shape (..., N).
    """
    x = np.asarray(channel_llrs)
    if x.ndim == 0 or x.shape[-1] != program.N:
        raise ValueError(f"expected channel vectors of length {program.N}")
    lead = x.shape[:-1]
    x = x.reshape(-1, program.N)
    if quant is not None:
        if not np.issubdtype(x.dtype, np.integer):
            raise ValueError("fixed-point decoding expects integer channel LLRs")
        lim = quant.channel_limit
        if np.abs(x, dtype=np.int64).max(initial=0) > lim:
            raise ValueError(f"channel LLRs exceed the +-{lim} channel range")
        x = x.astype(np.int32)
        sat = quant.internal_limit
    else:
        x = x.astype(np.float64)
        sat = None
    n = program.n_bits
    # channel vectors arrive in transmission (bit-reversed) order; the
    # instruction schedule walks the natural-order tree
    rev = bit_reverse_permutation(n)
    out = np.zeros(x.shape, dtype=np.uint8)
    alpha = {n: x[:, rev]}
    betal = {}
    betar = {}
    for pc, ins in enumerate(program.instructions):
        if debug:
            _check_access(ins, program.p, pc)
        try:
            _step(ins, n, alpha, betal, betar, out, sat)
        except EngineError:
            raise
        except Exception as exc:
            raise EngineError(str(exc), pc=pc)
    out = out[:, rev]
    return out.reshape(lead + (program.N,)) if lead else out[0]


def decode_info(program, channel_llrs, quant=None, debug=False):
    """Execute and gather the information bits (source order)."""
    if program.spec is None:
        raise ValueError("program carries no code spec; decode the codeword instead")
    beta = execute(program, channel_llrs, quant=quant, debug=debug)
    return extract_info(beta, program.spec)


def _step(ins, n, alpha, betal, betar, out, sat):
    op, s = ins.op, ins.stage
    if op is Opcode.F or op is Opcode.G or op is Opcode.G_0R:
        src = alpha[s + 1]
        a, b = src[:, : 1 << s], src[:, 1 << s :]
        if op is Opcode.F:
            alpha[s] = f_op(a, b)
        elif op is Opcode.G:
            alpha[s] = g_op(a, b, betal[s], sat)
        else:
            alpha[s] = g_op(a, b, 0, sat)
        return
    if op is Opcode.COMBINE:
        val = combine_op(betal[s - 1], betar[s - 1])
    elif op is Opcode.COMBINE_0R:
        br = betar[s - 1]
        val = np.concatenate((br, br), axis=-1)
    elif op is Opcode.P_R1 or op is Opcode.P_RSPC:
        src = alpha[s]
        half = 1 << (s - 1)
        bl = betal[s - 1]
        ar = g_op(src[:, :half], src[:, half:], bl, sat)
        br = hd_op(ar) if op is Opcode.P_R1 else decode_spc(ar)
        val = np.concatenate((bl ^ br, br), axis=-1)
    elif op is Opcode.P_01 or op is Opcode.P_0SPC:
        src = alpha[s]
        half = 1 << (s - 1)
        ar = g_op(src[:, :half], src[:, half:], 0, sat)
        br = hd_op(ar) if op is Opcode.P_01 else decode_spc(ar)
        val = np.concatenate((br, br), axis=-1)
    elif op is Opcode.REP:
        val = decode_rep(alpha[s])
    elif op is Opcode.REP_SPC:
        val = decode_rep_spc(alpha[s], sat)
    elif op is Opcode.ML:
        val = decode_ml4(alpha[s])
    elif op is Opcode.R1:
        val = hd_op(alpha[s])
    else:
        raise ValueError(f"unhandled opcode {op}")
    if s == n:
        out[:, :] = val
    elif ins.right:
        betar[s] = val
    else:
        betal[s] = val


def _check_access(ins, p, pc):
    """Modeled memory discipline: at most 2P soft reads per cycle."""
    op, s = ins.op, ins.stage
    size = 1 << s
    if op is Opcode.F or op is Opcode.G or op is Opcode.G_0R:
        reads, steps = 2 * size, max(1, size // p)
    elif op in (Opcode.COMBINE, Opcode.COMBINE_0R):
        return
    elif op is Opcode.REP:
        reads = size
        steps = 1 if size <= 2 * p else size // (2 * p)
    elif op is Opcode.REP_SPC or op is Opcode.ML:
        reads, steps = size, 1
    else:  # P-* mergers and R1 read the node's alpha during the g phase
        reads, steps = size, max(1, size // (2 * p))
    if reads > steps * 2 * p:
        raise EngineError(
            f"{ins} reads {reads} values in {steps} cycles, over the 2P={2 * p} limit",
            pc=pc,
        )
