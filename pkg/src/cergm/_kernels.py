"""Hot loops over the mutable graph state.

The entry points take the :class:`~cergm.network.GraphState` tuple (and, for
change statistics, the :class:`ModelArrays` of a compiled model) and are
compiled by numba unless ``CERGM_DISABLE_NUMBA`` is set. They unpack the
arrays once and call helpers that take plain arrays and are inlined at the
numba IR level. Passing the tuple through calls, or nesting inlined helpers
more than one level deep, leaves a reference-count update per array per call
in the hot loop, which used to dominate the step time.

Only ``math`` and array indexing are used so both paths produce the same
floating-point values.
"""
import math

from ._jit import njit

# term codes understood by the change-statistic loop
INDEP = 0
MUTUAL = 1
GWIDEGREE = 2
GWESP_OSP = 3
DIFF_TERM_TRANS = 4

_inline = njit(inline="always")


@_inline
def _toggle(d, dyad_i, dyad_j, focal_idx, adj, outdeg, indeg, fout, fout_len, fout_pos,
            fin, fin_len, fin_pos, edge_list, edge_pos, n_edges):
    i = dyad_i[d]
    j = dyad_j[d]
    f = focal_idx[i]
    if adj[i, j] != 0:
        adj[i, j] = 0
        outdeg[i] -= 1
        indeg[j] -= 1
        # swap-remove j from the out list of i
        p = fout_pos[f, j]
        last = fout[f, fout_len[f] - 1]
        fout[f, p] = last
        fout_pos[f, last] = p
        fout_len[f] -= 1
        # swap-remove i from the focal in list of j
        p = fin_pos[j, f]
        last = fin[j, fin_len[j] - 1]
        fin[j, p] = last
        fin_pos[j, focal_idx[last]] = p
        fin_len[j] -= 1
        # swap-remove d from the present-edge list
        p = edge_pos[d]
        k = n_edges[0] - 1
        last = edge_list[k]
        edge_list[p] = last
        edge_pos[last] = p
        n_edges[0] = k
        return -1
    adj[i, j] = 1
    outdeg[i] += 1
    indeg[j] += 1
    p = fout_len[f]
    fout[f, p] = j
    fout_pos[f, j] = p
    fout_len[f] = p + 1
    p = fin_len[j]
    fin[j, p] = i
    fin_pos[j, f] = p
    fin_len[j] = p + 1
    k = n_edges[0]
    edge_list[k] = d
    edge_pos[d] = k
    n_edges[0] = k + 1
    return 1


@njit
def toggle(g, d):
    """Flip free dyad ``d``; returns +1 if an edge was added, -1 if removed."""
    return _toggle(d, g.dyad_i, g.dyad_j, g.focal_idx, g.adj, g.outdeg, g.indeg, g.fout,
                   g.fout_len, g.fout_pos, g.fin, g.fin_len, g.fin_pos, g.edge_list,
                   g.edge_pos, g.n_edges)


# The shared-partner and two-path loops are written out in place: a third
# level of inlined helpers brings the reference counting back.

@_inline
def _gwesp_change(adj, fout, fout_len, fx_in_ptr, fx_in_idx, fin, fin_len, i, j, f, on,
                  base, scale):
    n_out = fout_len[f]
    total = 0.0
    # the pair {i, j} becomes connected unless j already cites i
    if adj[j, i] == 0:
        sp = 0
        for q in range(n_out):
            if adj[j, fout[f, q]] != 0:
                sp += 1
        total += scale * (1.0 - math.pow(base, float(sp)))
    # j joins the shared partners of i and every other citer k of j
    for q in range(fx_in_ptr[j], fx_in_ptr[j + 1]):
        k = fx_in_idx[q]
        if adj[i, k] != 0:
            sp = 0
            for r in range(n_out):
                if adj[k, fout[f, r]] != 0:
                    sp += 1
            total += math.pow(base, float(sp - on))
    for q in range(fin_len[j]):
        k = fin[j, q]
        if k != i and (adj[i, k] != 0 or adj[k, i] != 0):
            sp = 0
            for r in range(n_out):
                if adj[k, fout[f, r]] != 0:
                    sp += 1
            total += math.pow(base, float(sp - on))
    return total


@_inline
def _dtt_change(adj, fout, fout_len, focal_idx, fx_out_ptr, fx_out_idx, i, j, f, on):
    # two-paths i -> k -> l run through non-focal k
    if focal_idx[j] >= 0:
        return 0.0
    n_out = fout_len[f]
    total = 0.0
    for q in range(n_out):
        k = fout[f, q]
        if focal_idx[k] < 0 and adj[k, j] != 0:
            total += 1.0
            break
    # edges i -> l that i -> j -> l would newly close
    for q in range(fx_out_ptr[j], fx_out_ptr[j + 1]):
        l = fx_out_idx[q]
        if adj[i, l] == 0:
            continue
        c = 0
        for r in range(n_out):
            k = fout[f, r]
            if focal_idx[k] < 0 and adj[k, l] != 0:
                c += 1
        if c - on == 0:
            total += 1.0
    return total


# The change-statistic dispatch below is repeated in each entry kernel
# rather than factored into a helper; see the module docstring.

@njit
def change_into(g, m, d, out):
    """Write h(dyad on) - h(dyad off) for free dyad ``d`` into ``out``."""
    dyad_i, dyad_j, focal_idx, adj, indeg = g.dyad_i, g.dyad_j, g.focal_idx, g.adj, g.indeg
    fout, fout_len, fin, fin_len = g.fout, g.fout_len, g.fin, g.fin_len
    fx_out_ptr, fx_out_idx, fx_in_ptr, fx_in_idx = g.fx_out_ptr, g.fx_out_idx, g.fx_in_ptr, g.fx_in_idx
    codes, base, scale, X = m.codes, m.base, m.scale, m.X
    i = dyad_i[d]
    j = dyad_j[d]
    f = focal_idx[i]
    on = 1 if adj[i, j] != 0 else 0
    for t in range(codes.shape[0]):
        code = codes[t]
        if code == INDEP:
            out[t] = X[d, t]
        elif code == MUTUAL:
            out[t] = 1.0 if adj[j, i] != 0 else 0.0
        elif code == GWIDEGREE:
            out[t] = math.pow(base[t], float(indeg[j] - on))
        elif code == GWESP_OSP:
            out[t] = _gwesp_change(adj, fout, fout_len, fx_in_ptr, fx_in_idx, fin, fin_len,
                                   i, j, f, on, base[t], scale[t])
        else:
            out[t] = _dtt_change(adj, fout, fout_len, focal_idx, fx_out_ptr, fx_out_idx,
                                 i, j, f, on)


@njit
def design_matrix(g, m, out):
    dyad_i, dyad_j, focal_idx, adj, indeg = g.dyad_i, g.dyad_j, g.focal_idx, g.adj, g.indeg
    fout, fout_len, fin, fin_len = g.fout, g.fout_len, g.fin, g.fin_len
    fx_out_ptr, fx_out_idx, fx_in_ptr, fx_in_idx = g.fx_out_ptr, g.fx_out_idx, g.fx_in_ptr, g.fx_in_idx
    codes, base, scale, X = m.codes, m.base, m.scale, m.X
    for d in range(dyad_i.shape[0]):
        i = dyad_i[d]
        j = dyad_j[d]
        f = focal_idx[i]
        on = 1 if adj[i, j] != 0 else 0
        for t in range(codes.shape[0]):
            code = codes[t]
            if code == INDEP:
                out[d, t] = X[d, t]
            elif code == MUTUAL:
                out[d, t] = 1.0 if adj[j, i] != 0 else 0.0
            elif code == GWIDEGREE:
                out[d, t] = math.pow(base[t], float(indeg[j] - on))
            elif code == GWESP_OSP:
                out[d, t] = _gwesp_change(adj, fout, fout_len, fx_in_ptr, fx_in_idx, fin,
                                          fin_len, i, j, f, on, base[t], scale[t])
            else:
                out[d, t] = _dtt_change(adj, fout, fout_len, focal_idx, fx_out_ptr,
                                        fx_out_idx, i, j, f, on)


@_inline
def _signed_dot(theta, delta, sign):
    # skips zero changes so an infinite coefficient only acts where it moves
    s = 0.0
    for c in range(theta.shape[0]):
        if delta[c] != 0.0:
            s += theta[c] * (sign * delta[c])
    return s


@_inline
def _tnt_log_q_on(n_edges, n_dyads):
    if n_edges == 0:
        return -math.log(n_dyads)
    return math.log(0.5) - math.log(n_dyads)


@_inline
def _tnt_log_q_off(n_edges, n_dyads):
    return math.log(0.5 / n_edges + 0.5 / n_dyads)


@njit(nogil=True)
def mh_chain(g, m, theta, stats, U, tnt, interval, countdown, out, out_edges, out_pos, buf):
    """Run ``U.shape[0]`` Metropolis-Hastings proposals.

    ``U`` holds three uniforms per proposal (branch, index, acceptance).
    A draw is written to ``out[out_pos]`` whenever ``countdown`` reaches zero.
    Returns the updated ``(countdown, out_pos, n_accepted)``.
    """
    dyad_i, dyad_j, focal_idx, adj, indeg, outdeg = g.dyad_i, g.dyad_j, g.focal_idx, g.adj, g.indeg, g.outdeg
    fout, fout_len, fout_pos = g.fout, g.fout_len, g.fout_pos
    fin, fin_len, fin_pos = g.fin, g.fin_len, g.fin_pos
    fx_out_ptr, fx_out_idx, fx_in_ptr, fx_in_idx = g.fx_out_ptr, g.fx_out_idx, g.fx_in_ptr, g.fx_in_idx
    edge_list, edge_pos, n_edges = g.edge_list, g.edge_pos, g.n_edges
    codes, base, scale, X = m.codes, m.base, m.scale, m.X
    n_dyads = dyad_i.shape[0]
    accepted = 0
    for s in range(U.shape[0]):
        n_e = n_edges[0]
        if tnt and n_e > 0 and U[s, 0] < 0.5:
            k = int(U[s, 1] * n_e)
            if k >= n_e:
                k = n_e - 1
            d = edge_list[k]
        else:
            d = int(U[s, 1] * n_dyads)
            if d >= n_dyads:
                d = n_dyads - 1
        on = adj[dyad_i[d], dyad_j[d]] != 0
        i = dyad_i[d]
        j = dyad_j[d]
        f = focal_idx[i]
        on = 1 if adj[i, j] != 0 else 0
        for t in range(codes.shape[0]):
            code = codes[t]
            if code == INDEP:
                buf[t] = X[d, t]
            elif code == MUTUAL:
                buf[t] = 1.0 if adj[j, i] != 0 else 0.0
            elif code == GWIDEGREE:
                buf[t] = math.pow(base[t], float(indeg[j] - on))
            elif code == GWESP_OSP:
                buf[t] = _gwesp_change(adj, fout, fout_len, fx_in_ptr, fx_in_idx, fin, fin_len,
                                       i, j, f, on, base[t], scale[t])
            else:
                buf[t] = _dtt_change(adj, fout, fout_len, focal_idx, fx_out_ptr, fx_out_idx,
                                     i, j, f, on)
        sign = -1.0 if on else 1.0
        logr = _signed_dot(theta, buf, sign)
        if tnt:
            if on:
                logr += _tnt_log_q_on(n_e - 1, n_dyads) - _tnt_log_q_off(n_e, n_dyads)
            else:
                logr += _tnt_log_q_off(n_e + 1, n_dyads) - _tnt_log_q_on(n_e, n_dyads)
        if logr >= 0.0 or U[s, 2] < math.exp(logr):
            _toggle(d, dyad_i, dyad_j, focal_idx, adj, outdeg, indeg, fout, fout_len, fout_pos,
                    fin, fin_len, fin_pos, edge_list, edge_pos, n_edges)
            for c in range(stats.shape[0]):
                stats[c] += sign * buf[c]
            accepted += 1
        countdown -= 1
        if countdown == 0:
            for c in range(stats.shape[0]):
                out[out_pos, c] = stats[c]
            out_edges[out_pos] = n_edges[0]
            out_pos += 1
            countdown = interval
    return countdown, out_pos, accepted


@_inline
def _objective(stats, target, weights):
    s = 0.0
    for c in range(stats.shape[0]):
        r = stats[c] - target[c]
        s += weights[c] * r * r
    return s


@_inline
def _matched(stats, target, integral, obj, tol):
    # integer-valued coordinates exactly, the rest through the weighted objective
    if obj > tol:
        return False
    for c in range(stats.shape[0]):
        if integral[c] and abs(stats[c] - target[c]) > 1e-9:
            return False
    return True


@njit
def anneal_chain(g, m, stats, target, weights, integral, U, step0, t0, log_decay, swap_prob, tol,
                 best, best_edges, buf, trial):
    """Simulated annealing over free-dyad toggles.

    Each proposal toggles one random dyad or, with probability ``swap_prob``,
    a swap: one random dyad plus one dyad in the opposite state (a present
    edge when the first dyad is absent, a random dyad otherwise), which lets
    the search adjust real-valued coordinates without moving the edge count.
    The temperature at proposal ``k`` is ``t0 * exp(k * log_decay)``.
    ``U`` holds four uniforms per proposal.

    ``best[0]`` is the best objective seen so far and ``best[1]`` the edge
    count of that state, whose free-dyad ids are kept in ``best_edges``.
    Returns ``(steps_taken, matched)``.
    """
    dyad_i, dyad_j, focal_idx, adj, indeg, outdeg = g.dyad_i, g.dyad_j, g.focal_idx, g.adj, g.indeg, g.outdeg
    fout, fout_len, fout_pos = g.fout, g.fout_len, g.fout_pos
    fin, fin_len, fin_pos = g.fin, g.fin_len, g.fin_pos
    fx_out_ptr, fx_out_idx, fx_in_ptr, fx_in_idx = g.fx_out_ptr, g.fx_out_idx, g.fx_in_ptr, g.fx_in_idx
    edge_list, edge_pos, n_edges = g.edge_list, g.edge_pos, g.n_edges
    codes, base, scale, X = m.codes, m.base, m.scale, m.X
    n_dyads = dyad_i.shape[0]
    p = stats.shape[0]
    obj = _objective(stats, target, weights)
    first = 0
    second = 0
    for s in range(U.shape[0]):
        temp = t0 * math.exp(float(step0 + s) * log_decay)
        n_moves = 2 if U[s, 0] < swap_prob and n_dyads > 1 else 1
        for c in range(p):
            trial[c] = stats[c]
        done = 0
        for mv in range(n_moves):
            d = int(U[s, 1 + mv] * n_dyads)
            if d >= n_dyads:
                d = n_dyads - 1
            if mv == 1:
                if adj[dyad_i[first], dyad_j[first]] != 0:
                    # first move appended an edge: remove one of the others
                    k = n_edges[0] - 1
                    if k <= 0:
                        break
                    d = edge_list[int(U[s, 2] * k) % k]
                elif d == first:
                    break
            i = dyad_i[d]
            j = dyad_j[d]
            f = focal_idx[i]
            on = 1 if adj[i, j] != 0 else 0
            for t in range(codes.shape[0]):
                code = codes[t]
                if code == INDEP:
                    buf[t] = X[d, t]
                elif code == MUTUAL:
                    buf[t] = 1.0 if adj[j, i] != 0 else 0.0
                elif code == GWIDEGREE:
                    buf[t] = math.pow(base[t], float(indeg[j] - on))
                elif code == GWESP_OSP:
                    buf[t] = _gwesp_change(adj, fout, fout_len, fx_in_ptr, fx_in_idx, fin, fin_len,
                                           i, j, f, on, base[t], scale[t])
                else:
                    buf[t] = _dtt_change(adj, fout, fout_len, focal_idx, fx_out_ptr, fx_out_idx,
                                         i, j, f, on)
            sign = -1.0 if on else 1.0
            for c in range(p):
                trial[c] += sign * buf[c]
            _toggle(d, dyad_i, dyad_j, focal_idx, adj, outdeg, indeg, fout, fout_len, fout_pos,
                    fin, fin_len, fin_pos, edge_list, edge_pos, n_edges)
            if mv == 0:
                first = d
            else:
                second = d
            done += 1
        new_obj = _objective(trial, target, weights)
        if new_obj <= obj or (temp > 0.0 and U[s, 3] < math.exp(-(new_obj - obj) / temp)):
            for c in range(p):
                stats[c] = trial[c]
            obj = new_obj
            if obj < best[0]:
                best[0] = obj
                best[1] = n_edges[0]
                for q in range(n_edges[0]):
                    best_edges[q] = edge_list[q]
            if _matched(stats, target, integral, obj, tol):
                return s + 1, True
        else:
            if done == 2:
                _toggle(second, dyad_i, dyad_j, focal_idx, adj, outdeg, indeg, fout, fout_len,
                        fout_pos, fin, fin_len, fin_pos, edge_list, edge_pos, n_edges)
            _toggle(first, dyad_i, dyad_j, focal_idx, adj, outdeg, indeg, fout, fout_len,
                    fout_pos, fin, fin_len, fin_pos, edge_list, edge_pos, n_edges)
    return U.shape[0], False


@_inline
def _otp_osp(adj, out_nodes, lo, hi, j):
    # outgoing two-paths i -> r -> j and outgoing shared partners of i and j,
    # where out_nodes[lo:hi] are the out-neighbours of i
    otp = 0
    osp = 0
    for q in range(lo, hi):
        r = out_nodes[q]
        if adj[r, j] != 0:
            otp += 1
        if adj[j, r] != 0:
            osp += 1
    return otp, osp


@njit
def esp_counts(g, cumulative, otp_out, osp_out):
    """Per-edge OTP and OSP shared-partner counts; returns the edge count.

    Free edges come first (in edge-list order), then, if ``cumulative``, the
    fixed edges of the history.
    """
    adj, focal_idx, fout, fout_len = g.adj, g.focal_idx, g.fout, g.fout_len
    dyad_i, dyad_j, edge_list = g.dyad_i, g.dyad_j, g.edge_list
    fx_out_ptr, fx_out_idx = g.fx_out_ptr, g.fx_out_idx
    e = 0
    for q in range(g.n_edges[0]):
        d = edge_list[q]
        f = focal_idx[dyad_i[d]]
        otp, osp = _otp_osp(adj, fout[f], 0, fout_len[f], dyad_j[d])
        otp_out[e] = otp
        osp_out[e] = osp
        e += 1
    if cumulative:
        for k in range(focal_idx.shape[0]):
            if focal_idx[k] >= 0:
                continue
            lo = fx_out_ptr[k]
            hi = fx_out_ptr[k + 1]
            for q in range(lo, hi):
                otp, osp = _otp_osp(adj, fx_out_idx, lo, hi, fx_out_idx[q])
                otp_out[e] = otp
                osp_out[e] = osp
                e += 1
    return e
