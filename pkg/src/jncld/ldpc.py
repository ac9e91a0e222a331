"""LDPC codes: parity-check matrices, GF(2) encoding, sum-product decoding.

The decoder consumes log-likelihood ratios under the package-wide sign
convention ``LLR = log P(c=1) / P(c=0)`` (positive favors 1) and performs
exact sum-product (tanh-rule) message passing on the code's Tanner graph.
Channel LLRs and messages are clamped to ``+-LLR_CLAMP`` so the tanh /
log domain arithmetic cannot overflow.

Both sources of a two-way relay link share one code, so the XOR of any
two codewords is again a codeword; ``syndrome_check`` is the primitive
that property rests on.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple

import numpy as np

LLR_CLAMP = 50.0

# tanh magnitudes are kept strictly inside (0, 1) so logs and arctanh stay finite
_TANH_LO = 1e-300
_TANH_HI = 1.0 - 1e-15


class LdpcError(ValueError):
    """Invalid code definition or misuse of a code object."""


class AlistFormatError(LdpcError):
    """Malformed alist text; carries the offending 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"alist line {line}: {message}")
        self.line = line


@dataclass(frozen=True, eq=False)
class _TannerGraph:
    """Flat edge arrays for vectorized message passing (check-major order)."""

    edge_bit: np.ndarray        # (E,) bit index of each edge
    check_of_edge: np.ndarray   # (E,) position of the edge's check in nz_checks
    check_starts: np.ndarray    # reduceat offsets over edges, nonempty checks only
    nz_checks: np.ndarray       # check ids with degree >= 1
    perm: np.ndarray            # edge permutation: check-major -> bit-major
    inv_perm: np.ndarray
    sorted_edge_bit: np.ndarray  # edge_bit[perm]
    bit_starts: np.ndarray      # reduceat offsets in bit-major order
    nz_bits: np.ndarray         # bit ids with degree >= 1


@dataclass(frozen=True, eq=False)
class ParityCheckMatrix:
    """Sparse binary check matrix stored as per-check and per-bit index lists.

    ``rows[i]`` holds the sorted bit indices of check ``i``; ``cols[j]`` the
    sorted check indices of bit ``j``. The two views must describe the same
    matrix, all indices must be in range and duplicate-free, and the code
    must have positive design rate (fewer checks than bits). Instances are
    immutable and safe to share across workers.
    """

    n_checks: int
    n_bits: int
    rows: tuple[np.ndarray, ...]
    cols: tuple[np.ndarray, ...]

    def __post_init__(self):
        if self.n_checks >= self.n_bits:
            raise LdpcError(
                f"need n_checks < n_bits for a positive-rate code, got "
                f"{self.n_checks}x{self.n_bits}"
            )
        if len(self.rows) != self.n_checks or len(self.cols) != self.n_bits:
            raise LdpcError("rows/cols length disagrees with matrix dimensions")
        rows = tuple(np.asarray(r, dtype=np.int32) for r in self.rows)
        cols = tuple(np.asarray(c, dtype=np.int32) for c in self.cols)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        for i, r in enumerate(rows):
            if r.size and (r.min() < 0 or r.max() >= self.n_bits):
                raise LdpcError(f"check {i} references a bit outside [0, {self.n_bits})")
            if np.unique(r).size != r.size or np.any(np.diff(r) < 0):
                raise LdpcError(f"check {i} has duplicate or unsorted bit indices")
        for j, c in enumerate(cols):
            if c.size and (c.min() < 0 or c.max() >= self.n_checks):
                raise LdpcError(f"bit {j} references a check outside [0, {self.n_checks})")
            if np.unique(c).size != c.size or np.any(np.diff(c) < 0):
                raise LdpcError(f"bit {j} has duplicate or unsorted check indices")
        # transposition cross-check: the two adjacency views must agree
        implied = [[] for _ in range(self.n_bits)]
        for i, r in enumerate(rows):
            for j in r:
                implied[j].append(i)
        for j, c in enumerate(cols):
            if not np.array_equal(np.asarray(implied[j], dtype=np.int32), c):
                raise LdpcError(f"rows/cols views disagree at bit {j}")

    @classmethod
    def from_rows(cls, n_bits: int, rows: Iterable[Iterable[int]]) -> "ParityCheckMatrix":
        rows = tuple(np.sort(np.asarray(list(r), dtype=np.int32)) for r in rows)
        cols: list[list[int]] = [[] for _ in range(n_bits)]
        for i, r in enumerate(rows):
            for j in r:
                if not 0 <= j < n_bits:
                    raise LdpcError(f"check {i} references a bit outside [0, {n_bits})")
                cols[j].append(i)
        return cls(
            n_checks=len(rows),
            n_bits=n_bits,
            rows=rows,
            cols=tuple(np.asarray(c, dtype=np.int32) for c in cols),
        )

    @classmethod
    def from_dense(cls, mat: np.ndarray) -> "ParityCheckMatrix":
        mat = np.asarray(mat)
        if mat.ndim != 2 or not np.all((mat == 0) | (mat == 1)):
            raise LdpcError("dense parity-check matrix must be 2-D binary")
        return cls.from_rows(mat.shape[1], [np.nonzero(row)[0] for row in mat])

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n_checks, self.n_bits), dtype=np.uint8)
        for i, r in enumerate(self.rows):
            out[i, r] = 1
        return out

    @property
    def row_degrees(self) -> np.ndarray:
        return np.array([r.size for r in self.rows])

    @property
    def col_degrees(self) -> np.ndarray:
        return np.array([c.size for c in self.cols])

    @cached_property
    def _graph(self) -> _TannerGraph:
        deg = self.row_degrees
        nz_checks = np.nonzero(deg)[0]
        if nz_checks.size == 0:
            raise LdpcError("parity-check matrix has no edges")
        edge_bit = np.concatenate([self.rows[i] for i in nz_checks]).astype(np.int32)
        counts = deg[nz_checks]
        check_starts = np.concatenate(([0], np.cumsum(counts[:-1])))
        check_of_edge = np.repeat(np.arange(nz_checks.size, dtype=np.int32), counts)
        perm = np.argsort(edge_bit, kind="stable").astype(np.int32)
        sorted_edge_bit = edge_bit[perm]
        bdeg = np.bincount(edge_bit, minlength=self.n_bits)
        nz_bits = np.nonzero(bdeg)[0]
        bit_starts = np.concatenate(([0], np.cumsum(bdeg[nz_bits][:-1])))
        inv_perm = np.empty_like(perm)
        inv_perm[perm] = np.arange(perm.size, dtype=np.int32)
        return _TannerGraph(
            edge_bit=edge_bit,
            check_of_edge=check_of_edge,
            check_starts=check_starts,
            nz_checks=nz_checks,
            perm=perm,
            inv_perm=inv_perm,
            sorted_edge_bit=sorted_edge_bit,
            bit_starts=bit_starts,
            nz_bits=nz_bits,
        )


# ---------------------------------------------------------------------------
# alist interchange format
# ---------------------------------------------------------------------------

def load_alist(text: str) -> ParityCheckMatrix:
    """Parse the standard alist layout into a ParityCheckMatrix.

    Layout: ``N M`` / ``max_col_degree max_row_degree`` / N column degrees /
    M row degrees / N column index lines / M row index lines, indices
    1-based, zero padding tolerated. Errors identify the offending line.
    """
    lines = text.splitlines()

    def ints(lineno: int, expect: int | None = None) -> list[int]:
        if lineno >= len(lines):
            raise AlistFormatError(len(lines) + 1, "unexpected end of file")
        try:
            vals = [int(tok) for tok in lines[lineno].split()]
        except ValueError:
            raise AlistFormatError(lineno + 1, f"non-integer token in {lines[lineno]!r}")
        if expect is not None and len(vals) != expect:
            raise AlistFormatError(lineno + 1, f"expected {expect} values, got {len(vals)}")
        return vals

    header = ints(0)
    if len(header) != 2:
        raise AlistFormatError(1, "header must be 'n_bits n_checks'")
    n_bits, n_checks = header
    if n_bits <= 0 or n_checks <= 0:
        raise AlistFormatError(1, f"dimensions must be positive, got {n_bits} {n_checks}")
    max_deg = ints(1)
    if len(max_deg) != 2:
        raise AlistFormatError(2, "second line must be 'max_col_degree max_row_degree'")
    col_deg = ints(2, n_bits)
    row_deg = ints(3, n_checks)

    def entry_lines(start: int, count: int, degrees: list[int], limit: int, kind: str):
        out = []
        for k in range(count):
            lineno = start + k
            vals = [v for v in ints(lineno) if v != 0]  # zero padding
            if len(vals) != degrees[k]:
                raise AlistFormatError(
                    lineno + 1,
                    f"{kind} {k + 1} lists {len(vals)} entries but declares degree {degrees[k]}",
                )
            idx = np.asarray(vals, dtype=np.int64) - 1
            if idx.size and (idx.min() < 0 or idx.max() >= limit):
                raise AlistFormatError(lineno + 1, f"index out of range 1..{limit}")
            if np.unique(idx).size != idx.size:
                raise AlistFormatError(lineno + 1, f"duplicate index in {kind} {k + 1}")
            out.append(np.sort(idx).astype(np.int32))
        return out

    cols = entry_lines(4, n_bits, col_deg, n_checks, "column")
    rows = entry_lines(4 + n_bits, n_checks, row_deg, n_bits, "row")

    try:
        return ParityCheckMatrix(
            n_checks=n_checks, n_bits=n_bits, rows=tuple(rows), cols=tuple(cols)
        )
    except LdpcError as exc:
        # the transposition mismatch has no single line; point at the entry block
        raise AlistFormatError(5, f"row/column sections are inconsistent: {exc}") from exc


def dump_alist(pcm: ParityCheckMatrix) -> str:
    """Serialize to alist text (entry lines zero-padded to the max degree)."""
    col_deg = pcm.col_degrees
    row_deg = pcm.row_degrees
    max_col = int(col_deg.max(initial=0))
    max_row = int(row_deg.max(initial=0))
    out = [
        f"{pcm.n_bits} {pcm.n_checks}",
        f"{max_col} {max_row}",
        " ".join(str(d) for d in col_deg),
        " ".join(str(d) for d in row_deg),
    ]
    for c in pcm.cols:
        entries = [str(i + 1) for i in c] + ["0"] * (max_col - c.size)
        out.append(" ".join(entries))
    for r in pcm.rows:
        entries = [str(i + 1) for i in r] + ["0"] * (max_row - r.size)
        out.append(" ".join(entries))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# code construction
# ---------------------------------------------------------------------------

def construct_regular(
    n_bits: int,
    col_degree: int,
    row_degree: int,
    seed: int,
    *,
    require_girth6: bool = False,
    max_restarts: int = 60,
) -> ParityCheckMatrix:
    """Random regular code with exact column and row degrees.

    Checks for each bit are drawn capacity-balanced at random, rejecting
    any pair of checks that already shares a bit so the result has no
    4-cycles. If the retry budget runs out (some degree combinations make
    girth 6 impossible), the constraint is dropped with a warning unless
    ``require_girth6`` is set, in which case an LdpcError is raised.
    Deterministic for a given seed.
    """
    if col_degree < 2 or row_degree < 2:
        raise LdpcError("degrees must be >= 2")
    if (n_bits * col_degree) % row_degree != 0:
        raise LdpcError(
            f"n_bits * col_degree = {n_bits * col_degree} is not divisible by "
            f"row_degree = {row_degree}"
        )
    if col_degree >= row_degree:
        raise LdpcError("need col_degree < row_degree for a positive-rate code")
    n_checks = n_bits * col_degree // row_degree

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
    for _ in range(max_restarts):
        rows = _try_regular(n_checks, n_bits, col_degree, row_degree, rng, avoid4=True)
        if rows is not None:
            return ParityCheckMatrix.from_rows(n_bits, rows)
    if require_girth6:
        raise LdpcError(
            f"retry budget exhausted: no 4-cycle-free ({col_degree},{row_degree}) "
            f"matrix with n_bits={n_bits} found in {max_restarts} restarts; "
            "relax require_girth6 or change the degrees"
        )
    warnings.warn(
        f"4-cycle-free construction infeasible or budget exhausted for "
        f"(n={n_bits}, dv={col_degree}, dc={row_degree}); allowing 4-cycles",
        stacklevel=2,
    )
    for _ in range(max_restarts):
        rows = _try_regular(n_checks, n_bits, col_degree, row_degree, rng, avoid4=False)
        if rows is not None:
            return ParityCheckMatrix.from_rows(n_bits, rows)
    raise LdpcError("regular construction failed even allowing 4-cycles")


def _try_regular(n_checks, n_bits, col_degree, row_degree, rng, avoid4):
    capacity = np.full(n_checks, row_degree, dtype=np.int32)
    sharing = np.zeros((n_checks, n_checks), dtype=bool)
    checks_of_bit = []
    for _ in range(n_bits):
        cand = np.nonzero(capacity > 0)[0]
        if cand.size < col_degree:
            return None
        # random order, then prefer emptier checks: balances fill so the
        # tail of the construction cannot strand sockets on one check
        cand = cand[rng.permutation(cand.size)]
        cand = cand[np.argsort(-capacity[cand], kind="stable")]
        picked: list[int] = []
        for c in cand:
            if avoid4 and any(sharing[c, p] for p in picked):
                continue
            picked.append(int(c))
            if len(picked) == col_degree:
                break
        if len(picked) < col_degree:
            return None
        capacity[picked] -= 1
        for i, a in enumerate(picked):
            for b in picked[i + 1:]:
                sharing[a, b] = sharing[b, a] = True
        checks_of_bit.append(picked)
    rows = [[] for _ in range(n_checks)]
    for j, picked in enumerate(checks_of_bit):
        for c in picked:
            rows[c].append(j)
    return rows


def has_4cycles(pcm: ParityCheckMatrix) -> bool:
    """True if any two checks share two or more bits."""
    dense = pcm.to_dense().astype(np.float64)
    gram = dense @ dense.T
    np.fill_diagonal(gram, 0.0)
    return bool((gram >= 2).any())


# ---------------------------------------------------------------------------
# GF(2) encoding
# ---------------------------------------------------------------------------

def _gf2_row_reduce(mat: np.ndarray) -> list[int]:
    """In-place reduced row echelon form over GF(2); returns pivot columns."""
    n_rows, n_cols = mat.shape
    pivots: list[int] = []
    r = 0
    for col in range(n_cols):
        if r == n_rows:
            break
        hits = r + np.nonzero(mat[r:, col])[0]
        if hits.size == 0:
            continue
        p = hits[0]
        if p != r:
            mat[[r, p]] = mat[[p, r]]
        others = np.nonzero(mat[:, col])[0]
        others = others[others != r]
        mat[others] ^= mat[r]
        pivots.append(col)
        r += 1
    return pivots


def gf2_rank(mat: np.ndarray) -> int:
    work = np.array(mat, dtype=np.uint8, copy=True)
    return len(_gf2_row_reduce(work))


@dataclass(frozen=True, eq=False)
class Encoder:
    """Systematic-capable encoder derived from a parity-check matrix.

    Info bits are copied verbatim to ``info_positions``; the remaining
    ``pivot_positions`` carry parity computed from the row-reduced form.
    ``n_info = n_code - rank(H)`` so rank-deficient matrices simply yield
    more info positions.
    """

    n_info: int
    n_code: int
    h_rank: int
    info_positions: np.ndarray
    pivot_positions: np.ndarray
    parity_map: np.ndarray  # (h_rank, n_info) uint8; parity = parity_map @ info

    @property
    def rate(self) -> float:
        return self.n_info / self.n_code

    @cached_property
    def _parity_map_f(self) -> np.ndarray:
        # float64 copy: exact integer matmul without uint8 wraparound
        return self.parity_map.astype(np.float64)

    def encode(self, info: np.ndarray) -> np.ndarray:
        return self.encode_many(np.asarray(info)[None, :])[0]

    def encode_many(self, infos: np.ndarray) -> np.ndarray:
        infos = np.asarray(infos)
        if infos.ndim != 2 or infos.shape[1] != self.n_info:
            raise LdpcError(
                f"info block must have shape (batch, {self.n_info}), got {infos.shape}"
            )
        if infos.size and not np.all((infos == 0) | (infos == 1)):
            raise LdpcError("info bits must be in {0,1}")
        out = np.zeros((infos.shape[0], self.n_code), dtype=np.uint8)
        out[:, self.info_positions] = infos
        parity = (infos.astype(np.float64) @ self._parity_map_f.T) % 2.0
        out[:, self.pivot_positions] = parity.astype(np.uint8)
        return out


def derive_encoder(pcm: ParityCheckMatrix) -> Encoder:
    """GF(2) Gaussian elimination with pivot bookkeeping; works for any H."""
    work = pcm.to_dense()
    pivots = _gf2_row_reduce(work)
    rank = len(pivots)
    pivot_positions = np.asarray(pivots, dtype=np.int64)
    info_positions = np.setdiff1d(np.arange(pcm.n_bits), pivot_positions)
    parity_map = work[:rank][:, info_positions].copy()
    return Encoder(
        n_info=pcm.n_bits - rank,
        n_code=pcm.n_bits,
        h_rank=rank,
        info_positions=info_positions,
        pivot_positions=pivot_positions,
        parity_map=parity_map,
    )


def encode(encoder: Encoder, info: np.ndarray) -> np.ndarray:
    """Module-level convenience wrapper around Encoder.encode."""
    return encoder.encode(info)


# ---------------------------------------------------------------------------
# syndrome and decoding
# ---------------------------------------------------------------------------

def syndrome(pcm: ParityCheckMatrix, bits: np.ndarray) -> np.ndarray:
    """Per-check parities of H @ c over GF(2), shape (n_checks,)."""
    bits = np.asarray(bits)
    if bits.shape != (pcm.n_bits,):
        raise LdpcError(f"codeword length {bits.shape} does not match n_bits={pcm.n_bits}")
    g = pcm._graph
    out = np.zeros(pcm.n_checks, dtype=np.uint8)
    vals = bits.astype(np.uint8)[g.edge_bit]
    out[g.nz_checks] = np.bitwise_xor.reduceat(vals, g.check_starts)
    return out


def syndrome_check(pcm: ParityCheckMatrix, bits: np.ndarray) -> bool:
    """True iff H @ c = 0 over GF(2)."""
    return not syndrome(pcm, bits).any()


class BpResult(NamedTuple):
    bits: np.ndarray
    converged: bool
    iterations: int


def bp_decode(pcm: ParityCheckMatrix, llr: np.ndarray, max_iters: int) -> BpResult:
    """Sum-product decoding of one LLR vector.

    Returns the hard decision of the final posterior LLRs (positive -> 1),
    whether the syndrome reached zero within ``max_iters`` (with early
    exit), and the number of iterations actually run. Non-convergence is a
    normal outcome: the flag is reported and the last posterior is used.
    """
    llr = np.asarray(llr, dtype=np.float64)
    if llr.shape != (pcm.n_bits,):
        raise LdpcError(f"LLR length {llr.shape} does not match n_bits={pcm.n_bits}")
    bits, conv, iters = bp_decode_many(pcm, llr[None, :], max_iters)
    return BpResult(bits[0], bool(conv[0]), int(iters[0]))


def bp_decode_many(
    pcm: ParityCheckMatrix, llrs: np.ndarray, max_iters: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized sum-product decoding of a batch of LLR vectors.

    Same message schedule as :func:`bp_decode` applied to every row of
    ``llrs``; converged frames drop out of the working set so mixed
    batches stay cheap. Returns (hard bits, converged flags, iteration
    counts).
    """
    llrs = np.asarray(llrs, dtype=np.float64)
    if llrs.ndim != 2 or llrs.shape[1] != pcm.n_bits:
        raise LdpcError(f"LLR batch must have shape (batch, {pcm.n_bits})")
    if max_iters < 1:
        raise LdpcError("max_iters must be >= 1")
    g = pcm._graph
    n_frames, n_bits = llrs.shape

    out_bits = np.zeros((n_frames, n_bits), dtype=np.uint8)
    out_conv = np.zeros(n_frames, dtype=bool)
    out_iter = np.full(n_frames, max_iters, dtype=np.int64)

    if n_frames == 0:
        return out_bits, out_conv, out_iter

    chan = np.clip(llrs, -LLR_CLAMP, LLR_CLAMP)
    active = np.arange(n_frames)
    v2c = chan[:, g.edge_bit]  # variable-to-check messages, check-major order

    for it in range(1, max_iters + 1):
        # check update in the soft-symbol domain s = E[(-1)^c] = -tanh(m/2);
        # the extrinsic product over a check's other edges is formed as
        # (sign parity, sum of log magnitudes) minus the edge's own term
        soft = -np.tanh(0.5 * v2c)
        mag = np.clip(np.abs(soft), _TANH_LO, _TANH_HI)
        logmag = np.log(mag)
        neg = soft < 0.0
        log_tot = np.add.reduceat(logmag, g.check_starts, axis=1)
        par_tot = np.bitwise_xor.reduceat(neg, g.check_starts, axis=1)
        ex_log = log_tot[:, g.check_of_edge] - logmag
        ex_neg = par_tot[:, g.check_of_edge] ^ neg
        soft_out = np.exp(ex_log)
        np.clip(soft_out, None, _TANH_HI, out=soft_out)
        soft_out[ex_neg] *= -1.0
        c2v = -2.0 * np.arctanh(soft_out)
        np.clip(c2v, -LLR_CLAMP, LLR_CLAMP, out=c2v)

        # posterior = channel LLR + all incoming check messages
        c2v_bitmajor = c2v[:, g.perm]
        total = chan[active].copy()
        total[:, g.nz_bits] += np.add.reduceat(c2v_bitmajor, g.bit_starts, axis=1)
        hard = total > 0.0

        synd = np.bitwise_xor.reduceat(hard[:, g.edge_bit], g.check_starts, axis=1)
        done = ~synd.any(axis=1)
        if done.any():
            idx = active[done]
            out_bits[idx] = hard[done]
            out_conv[idx] = True
            out_iter[idx] = it
        keep = ~done
        if not keep.any():
            break
        if it == max_iters:
            idx = active[keep]
            out_bits[idx] = hard[keep]
            break

        active = active[keep]
        v2c_bitmajor = total[keep][:, g.sorted_edge_bit] - c2v_bitmajor[keep]
        v2c = v2c_bitmajor[:, g.inv_perm]
        np.clip(v2c, -LLR_CLAMP, LLR_CLAMP, out=v2c)

    return out_bits, out_conv, out_iter
