"""Independent reference implementations used as test oracles.

Nothing here imports the package's kernels, Merkle code or lowering code; the
permutation oracles read only the parameter data and use Python's built-in
modular ``pow`` with explicit index loops.
"""

import random

P = 21888242871839275222246405745257275088548364400416034343698204186575808495617


# -- field ------------------------------------------------------------------


def egcd_inverse(a, m=P):
    old_r, r = a % m, m
    old_s, s = 1, 0
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
    assert old_r == 1
    return old_s % m


def square_and_multiply(x, e, m=P):
    result, base = 1, x % m
    while e:
        if e & 1:
            result = result * base % m
        base = base * base % m
        e >>= 1
    return result


# -- permutations -----------------------------------------------------------


def _mat(m, v):
    n = len(v)
    out = [0] * n
    for i in range(n):
        acc = 0
        for j in range(n):
            acc += m[i][j] * v[j]
        out[i] = acc % P
    return out


def straight_line_permute(spec, state):
    """Round schedule spelled out as a flat list of steps, then executed."""
    d = spec.d
    rc = spec.round_constants
    x = [v % P for v in state]
    t = len(x)
    if spec.name == "mimc":
        left, right = x
        n = len(rc)
        for i in range(n):
            f = pow((left + rc[i][0]) % P, d, P)
            new_left = (right + f) % P
            if i < n - 1:
                left, right = new_left, left
            else:
                right = new_left
        return [left, right]
    if spec.name == "gmimc":
        for i in range(len(rc)):
            f = pow((x[0] + rc[i][0]) % P, d, P)
            head = x[0]
            for j in range(1, t):
                x[j] = (x[j] + f) % P
            x = x[1:] + [head]
        return x
    half = spec.rounds_full // 2
    steps = ["full"] * half + ["partial"] * spec.rounds_partial + ["full"] * half
    if spec.name == "poseidon":
        mds = spec.linear_layers["mds"]
        for i, kind in enumerate(steps):
            x = [(x[j] + rc[i][j]) % P for j in range(t)]
            if kind == "full":
                x = [pow(v, d, P) for v in x]
            else:
                x[0] = pow(x[0], d, P)
            x = _mat(mds, x)
        return x
    ext = spec.linear_layers["external"]
    internal = spec.linear_layers["internal"]
    x = _mat(ext, x)
    for i, kind in enumerate(steps):
        if kind == "full":
            x = [pow((x[j] + rc[i][j]) % P, d, P) for j in range(t)]
            x = _mat(ext, x)
        else:
            x[0] = pow((x[0] + rc[i][0]) % P, d, P)
            x = _mat(internal, x)
    return x


def straight_line_sponge(spec, inputs, rate=None):
    rate = rate or spec.t - 1
    state = [0] * spec.t
    i = 0
    while i < len(inputs):
        block = inputs[i : i + rate]
        for j, v in enumerate(block):
            state[j] = (state[j] + v) % P
        state = straight_line_permute(spec, state)
        i += rate
    return state[0]


# -- merkle -----------------------------------------------------------------


def recursive_root(leaves, h):
    """Root of a tree over ``leaves`` (length a power of two) by recursion."""
    if len(leaves) == 1:
        return leaves[0]
    mid = len(leaves) // 2
    return h(recursive_root(leaves[:mid], h), recursive_root(leaves[mid:], h))


def node_set(leaves, h):
    """All nodes keyed by (level, index)."""
    nodes = {(0, i): v for i, v in enumerate(leaves)}
    level, n = 0, len(leaves)
    while n > 1:
        for i in range(0, n, 2):
            nodes[(level + 1, i // 2)] = h(nodes[(level, i)], nodes[(level, i + 1)])
        level += 1
        n //= 2
    return nodes, level


def node_set_path(leaves, index, h):
    nodes, depth = node_set(leaves, h)
    sibs, bits = [], []
    for lvl in range(depth):
        i = index >> lvl
        sibs.append(nodes[(lvl, i ^ 1)])
        bits.append(i & 1)
    return sibs, bits


# -- circuits ---------------------------------------------------------------


def interpret_dag(gates, inputs):
    """Evaluate a gate list by memoized recursion from every gate."""
    memo = {}

    def ev(g):
        if g in memo:
            return memo[g]
        kind, ops, const = gates[g]
        if kind == "input":
            v = inputs[g] % P
        elif kind == "constant":
            v = const % P
        elif kind == "add":
            v = (ev(ops[0]) + ev(ops[1])) % P
        else:
            v = ev(ops[0]) * ev(ops[1]) % P
        memo[g] = v
        return v

    return [ev(g) for g in range(len(gates))]


def random_gate_list(rng: random.Random, n_gates=20, n_inputs=None, p_const=0.15):
    """A random topologically ordered gate list as (kind, operands, const) tuples.

    Every gate after the inputs is an add, mul or constant; the last gate is
    never a constant so the natural output depends on the inputs.
    """
    n_inputs = n_inputs or rng.randint(1, 4)
    gates = [("input", (), None) for _ in range(n_inputs)]
    while len(gates) < n_gates:
        r = rng.random()
        if r < p_const and len(gates) < n_gates - 1:
            gates.append(("constant", (), rng.randrange(1, P)))
        else:
            kind = "add" if rng.random() < 0.5 else "mul"
            a, b = rng.randrange(len(gates)), rng.randrange(len(gates))
            gates.append((kind, (a, b), None))
    return gates


def r1cs_rows_hold(A, B, C, r):
    """Brute-force row check, written against dense lists of lists."""
    bad = []
    for i in range(len(A)):
        a = sum(A[i][j] * r[j] for j in range(len(r))) % P
        b = sum(B[i][j] * r[j] for j in range(len(r))) % P
        c = sum(C[i][j] * r[j] for j in range(len(r))) % P
        if (a * b - c) % P:
            bad.append(i)
    return bad
