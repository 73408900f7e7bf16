"""Compiled event loops.

Every kernel consumes random numbers in the same order (one exponential
waiting time per event, then uniforms for the bond choice), so a given
generator state produces the same trajectory whichever observables are
being accumulated.  The pending event time lives in ``clock[1]`` and
survives across calls; stopping at an observation time therefore does not
perturb the path.

State shared by all kernels:
    species  int8[N]    0=A, 1=B, 2=C
    cnt9     int64[9]   number of bonds of each ordered type (3*left + right)
    clock    float64[2] current time, pending event time (negative: none)
"""
import numpy as np
from numba import njit

TWO_PI = 2.0 * np.pi


@njit(cache=True)
def bond_counts(species):
    n = species.shape[0]
    cnt = np.zeros(9, np.int64)
    for x in range(n):
        y = x + 1 if x + 1 < n else 0
        cnt[3 * species[x] + species[y]] += 1
    return cnt


@njit(cache=True, inline="always")
def _total_rate(cnt9, rate9):
    s = 0.0
    for i in range(9):
        s += cnt9[i] * rate9[i]
    return s


@njit(cache=True, inline="always")
def _pending(clock, cnt9, rate9, speed, gen):
    if clock[1] < 0.0:
        tot = _total_rate(cnt9, rate9)
        if tot <= 0.0:
            clock[1] = np.inf
        else:
            clock[1] = clock[0] + gen.standard_exponential() / (tot * speed)
    return clock[1]


@njit(cache=True, inline="always")
def _select_bond(species, acc9, n, gen):
    # Uniform bond plus thinning by rate/max_rate; the fractional part of
    # u*n is the acceptance uniform.
    while True:
        u = gen.random() * n
        x = int(u)
        if x >= n:
            x = n - 1
        y = x + 1 if x + 1 < n else 0
        if u - x < acc9[3 * species[x] + species[y]]:
            return x


@njit(cache=True, inline="always")
def _swap(species, cnt9, x, n):
    xm = x - 1 if x > 0 else n - 1
    xp = x + 1 if x + 1 < n else 0
    xpp = xp + 1 if xp + 1 < n else 0
    a = species[xm]
    b = species[x]
    c = species[xp]
    d = species[xpp]
    cnt9[3 * a + b] -= 1
    cnt9[3 * b + c] -= 1
    cnt9[3 * c + d] -= 1
    cnt9[3 * a + c] += 1
    cnt9[3 * c + b] += 1
    cnt9[3 * b + d] += 1
    species[x] = c
    species[xp] = b


# ---------------------------------------------------------------- plain ----

@njit(cache=True)
def run_plain(species, cnt9, clock, rate9, acc9, speed, t_stop, max_events,
              gen, record, log_t, log_x, log_l, log_r, n_log):
    """Advance until ``t_stop`` or ``max_events`` swaps, optionally logging.

    Returns (events, n_log, log_t, log_x, log_l, log_r); log arrays are
    reallocated when full.
    """
    n = species.shape[0]
    events = 0
    while events < max_events:
        tn = _pending(clock, cnt9, rate9, speed, gen)
        if tn >= t_stop:
            clock[0] = t_stop
            break
        x = _select_bond(species, acc9, n, gen)
        if record:
            if n_log == log_t.shape[0]:
                cap = 2 * log_t.shape[0] + 16
                nt = np.empty(cap, np.float64)
                nx = np.empty(cap, np.int64)
                nl = np.empty(cap, np.int8)
                nr = np.empty(cap, np.int8)
                nt[:n_log] = log_t[:n_log]
                nx[:n_log] = log_x[:n_log]
                nl[:n_log] = log_l[:n_log]
                nr[:n_log] = log_r[:n_log]
                log_t, log_x, log_l, log_r = nt, nx, nl, nr
            y = x + 1 if x + 1 < n else 0
            log_t[n_log] = tn
            log_x[n_log] = x
            log_l[n_log] = species[x]
            log_r[n_log] = species[y]
            n_log += 1
        _swap(species, cnt9, x, n)
        clock[0] = tn
        clock[1] = -1.0
        events += 1
    return events, n_log, log_t, log_x, log_l, log_r


@njit(cache=True)
def run_counting(species, cnt9, clock, rate9, acc9, speed, t_stop, gen):
    """Advance to ``t_stop``; return the number of swaps per bond type."""
    n = species.shape[0]
    per_type = np.zeros(9, np.int64)
    while True:
        tn = _pending(clock, cnt9, rate9, speed, gen)
        if tn >= t_stop:
            clock[0] = t_stop
            break
        x = _select_bond(species, acc9, n, gen)
        y = x + 1 if x + 1 < n else 0
        per_type[3 * species[x] + species[y]] += 1
        _swap(species, cnt9, x, n)
        clock[0] = tn
        clock[1] = -1.0
    return per_type


@njit(cache=True)
def run_current(species, cnt9, clock, rate9, acc9, speed, t_stop, gen):
    """Advance to ``t_stop`` and return the net integrated particle flux.

    Result [A, B] counts rightward minus leftward crossings summed over
    all bonds, i.e. the time-integrated total current of each species.
    """
    n = species.shape[0]
    flux = np.zeros(2, np.int64)
    while True:
        tn = _pending(clock, cnt9, rate9, speed, gen)
        if tn >= t_stop:
            clock[0] = t_stop
            break
        x = _select_bond(species, acc9, n, gen)
        y = x + 1 if x + 1 < n else 0
        b = species[x]
        c = species[y]
        if b < 2:
            flux[b] += 1
        if c < 2:
            flux[c] -= 1
        _swap(species, cnt9, x, n)
        clock[0] = tn
        clock[1] = -1.0
    return flux


# ---------------------------------------------------------- Dynkin ledger --
# Column layout of the ledger output, per sample time and tracked field.
L_Z = 0        # sum_y zeta_y Tf(y)
L_DRIFT = 1    # int of sum_y c_y (u_{y+1}-u_y)(Tf(y)-Tf(y+1))
L_JUMP = 2     # accumulated frame-shift jumps of L_Z
L_LAP = 3      # int of sum_y zeta_y Delta Tf(y)
L_QAA = 4      # int of sum_y grad Tf(y) a_y a_{y+1}
L_QBB = 5
L_QX = 6       # int of sum_y grad Tf(y) (a_y b_{y+1} + b_y a_{y+1})
L_GA = 7       # int of sum_y grad Tf(y) a_y
L_GB = 8
L_LA = 9       # int of sum_y Delta Tf(y) a_y
L_LB = 10
L_QV = 11      # int of sum_y c_y (u_{y+1}-u_y)^2 |Tf(y+1)-Tf(y)|^2
L_WIDTH = 12


@njit(cache=True, inline="always")
def _occ(s, sp):
    return 1.0 if s == sp else 0.0


@njit(cache=True)
def _ledger_sums(species, fv, gv, lv, uv, cen, rq, rate9, shift, m, cur):
    n = species.shape[0]
    z = 0j
    dr = 0j
    zl = 0j
    qaa = 0j
    qbb = 0j
    qx = 0j
    ga = 0j
    gb = 0j
    la = 0j
    lb = 0j
    qv = 0.0
    for y in range(n):
        yp = y + 1 if y + 1 < n else 0
        i = (y - shift) % n
        ip = (yp - shift) % n
        l = species[y]
        r = species[yp]
        ul = uv[m, l]
        ur = uv[m, r]
        z += (ul - cen[m]) * fv[m, i]
        zl += (ul - cen[m]) * lv[m, i]
        df = fv[m, i] - fv[m, ip]
        c = rate9[3 * l + r]
        dr += c * (ur - ul) * df
        qv += c * (ur - ul) ** 2 * (df.real ** 2 + df.imag ** 2)
        al = _occ(l, 0) - rq[0]
        ar = _occ(r, 0) - rq[0]
        bl = _occ(l, 1) - rq[1]
        br = _occ(r, 1) - rq[1]
        g = gv[m, i]
        qaa += g * al * ar
        qbb += g * bl * br
        qx += g * (al * br + bl * ar)
        ga += g * al
        gb += g * bl
        la += lv[m, i] * al
        lb += lv[m, i] * bl
    cur[0] = z
    cur[1] = dr
    cur[3] = zl
    cur[4] = qaa
    cur[5] = qbb
    cur[6] = qx
    cur[7] = ga
    cur[8] = gb
    cur[9] = la
    cur[10] = lb
    cur[11] = qv


@njit(cache=True, inline="always")
def _bond_terms(species, fv, gv, uv, rq, rate9, shift, m, y, n, sign, cur):
    yp = y + 1 if y + 1 < n else 0
    i = (y - shift) % n
    ip = (yp - shift) % n
    l = species[y]
    r = species[yp]
    ul = uv[m, l]
    ur = uv[m, r]
    df = fv[m, i] - fv[m, ip]
    c = rate9[3 * l + r]
    cur[1] += sign * c * (ur - ul) * df
    cur[11] += sign * c * (ur - ul) ** 2 * (df.real ** 2 + df.imag ** 2)
    al = _occ(l, 0) - rq[0]
    ar = _occ(r, 0) - rq[0]
    bl = _occ(l, 1) - rq[1]
    br = _occ(r, 1) - rq[1]
    g = gv[m, i]
    cur[4] += sign * g * al * ar
    cur[5] += sign * g * bl * br
    cur[6] += sign * g * (al * br + bl * ar)


@njit(cache=True, inline="always")
def _site_terms(species, fv, gv, lv, uv, cen, rq, shift, m, y, n, sign, cur):
    i = (y - shift) % n
    s = species[y]
    us = uv[m, s] - cen[m]
    a = _occ(s, 0) - rq[0]
    b = _occ(s, 1) - rq[1]
    cur[0] += sign * us * fv[m, i]
    cur[3] += sign * us * lv[m, i]
    cur[7] += sign * gv[m, i] * a
    cur[8] += sign * gv[m, i] * b
    cur[9] += sign * lv[m, i] * a
    cur[10] += sign * lv[m, i] * b


@njit(cache=True)
def run_ledger(species, cnt9, clock, rate9, acc9, speed, gen,
               fv, gv, lv, uv, cen, vel, rq, sample_times):
    """Event-exact Dynkin bookkeeping for M moving-frame fields.

    ``vel[m]`` is the frame velocity in lattice sites per unit of
    macroscopic time; the shift at time s is floor(vel[m] * s).
    Returns out[S, M, L_WIDTH] and the event count per sample.
    """
    n = species.shape[0]
    nm = fv.shape[0]
    ns = sample_times.shape[0]
    out = np.zeros((ns, nm, L_WIDTH), np.complex128)
    nev = np.zeros(ns, np.int64)
    cur = np.zeros((nm, L_WIDTH), np.complex128)
    acc = np.zeros((nm, L_WIDTH), np.complex128)
    pos = np.zeros(nm, np.int64)
    nxt = np.empty(nm, np.float64)
    t0 = clock[0]
    for m in range(nm):
        pos[m] = int(np.floor(vel[m] * t0))
        _ledger_sums(species, fv, gv, lv, uv, cen, rq, rate9, pos[m] % n, m, cur[m])
        if vel[m] > 0.0:
            nxt[m] = (pos[m] + 1) / vel[m]
        elif vel[m] < 0.0:
            nxt[m] = pos[m] / vel[m]
        else:
            nxt[m] = np.inf
    events = 0
    k = 0
    t = t0
    while k < ns:
        tn = _pending(clock, cnt9, rate9, speed, gen)
        # earliest frame shift
        ms = -1
        tshift = np.inf
        for m in range(nm):
            if nxt[m] < tshift:
                tshift = nxt[m]
                ms = m
        tsamp = sample_times[k]
        if tsamp <= tshift and tsamp <= tn:
            dt = tsamp - t
            for m in range(nm):
                for q in range(1, L_WIDTH):
                    if q != L_JUMP:
                        acc[m, q] += cur[m, q] * dt
                out[k, m, 0] = cur[m, 0]
                for q in range(1, L_WIDTH):
                    out[k, m, q] = acc[m, q]
            nev[k] = events
            t = tsamp
            k += 1
            continue
        if tshift <= tn:
            dt = tshift - t
            m = ms
            for mm in range(nm):
                for q in range(1, L_WIDTH):
                    if q != L_JUMP:
                        acc[mm, q] += cur[mm, q] * dt
            zold = cur[m, 0]
            if vel[m] > 0.0:
                pos[m] += 1
                nxt[m] = (pos[m] + 1) / vel[m]
            else:
                pos[m] -= 1
                nxt[m] = pos[m] / vel[m]
            _ledger_sums(species, fv, gv, lv, uv, cen, rq, rate9, pos[m] % n, m, cur[m])
            acc[m, L_JUMP] += cur[m, 0] - zold
            t = tshift
            continue
        # swap event
        dt = tn - t
        for m in range(nm):
            for q in range(1, L_WIDTH):
                if q != L_JUMP:
                    acc[m, q] += cur[m, q] * dt
        x = _select_bond(species, acc9, n, gen)
        xm = x - 1 if x > 0 else n - 1
        xp = x + 1 if x + 1 < n else 0
        for m in range(nm):
            sh = pos[m] % n
            _bond_terms(species, fv, gv, uv, rq, rate9, sh, m, xm, n, -1.0, cur[m])
            _bond_terms(species, fv, gv, uv, rq, rate9, sh, m, x, n, -1.0, cur[m])
            _bond_terms(species, fv, gv, uv, rq, rate9, sh, m, xp, n, -1.0, cur[m])
            _site_terms(species, fv, gv, lv, uv, cen, rq, sh, m, x, n, -1.0, cur[m])
            _site_terms(species, fv, gv, lv, uv, cen, rq, sh, m, xp, n, -1.0, cur[m])
        _swap(species, cnt9, x, n)
        for m in range(nm):
            sh = pos[m] % n
            _bond_terms(species, fv, gv, uv, rq, rate9, sh, m, xm, n, 1.0, cur[m])
            _bond_terms(species, fv, gv, uv, rq, rate9, sh, m, x, n, 1.0, cur[m])
            _bond_terms(species, fv, gv, uv, rq, rate9, sh, m, xp, n, 1.0, cur[m])
            _site_terms(species, fv, gv, lv, uv, cen, rq, sh, m, x, n, 1.0, cur[m])
            _site_terms(species, fv, gv, lv, uv, cen, rq, sh, m, xp, n, 1.0, cur[m])
        clock[0] = tn
        clock[1] = -1.0
        t = tn
        events += 1
    clock[0] = t
    return out, nev


# ------------------------------------------------------- Fourier modes -----

@njit(cache=True)
def mode_table(ks, n):
    """tab[x, j] = exp(-2 pi i k_j x / n); rows are contiguous per site."""
    tab = np.empty((n, ks.shape[0]), np.complex128)
    for j in range(ks.shape[0]):
        for x in range(n):
            tab[x, j] = np.exp(-1j * TWO_PI * ((ks[j] * x) % n) / n)
    return tab


@njit(cache=True)
def lab_coefficients(species, uv, field_of, tab):
    """hat zeta_F(k) = (1/N) sum_y u_F(eta_y) e_{-k}(y/N) for each tracked mode.

    ``uv`` should already include any centering; it only matters for k = 0.
    """
    n = species.shape[0]
    nm = tab.shape[1]
    c = np.zeros(nm, np.complex128)
    for j in range(nm):
        f = field_of[j]
        s = 0j
        for y in range(n):
            s += uv[f, species[y]] * tab[y, j]
        c[j] = s / n
    return c


@njit(cache=True)
def run_modes(species, cnt9, clock, rate9, acc9, speed, gen,
              uv, field_of, tab, sample_times):
    """Sample lab-frame Fourier coefficients of linear fields at given times."""
    n = species.shape[0]
    nm = tab.shape[1]
    ns = sample_times.shape[0]
    c = lab_coefficients(species, uv, field_of, tab)
    out = np.empty((ns, nm), np.complex128)
    inv_n = 1.0 / n
    for k in range(ns):
        ts = sample_times[k]
        while True:
            tn = _pending(clock, cnt9, rate9, speed, gen)
            if tn > ts:
                break
            x = _select_bond(species, acc9, n, gen)
            xp = x + 1 if x + 1 < n else 0
            b = species[x]
            cc = species[xp]
            for j in range(nm):
                f = field_of[j]
                d = uv[f, cc] - uv[f, b]
                if d != 0.0:
                    c[j] += d * inv_n * (tab[x, j] - tab[xp, j])
            _swap(species, cnt9, x, n)
            clock[0] = tn
            clock[1] = -1.0
        clock[0] = ts
        out[k, :] = c
    return out


@njit(cache=True)
def run_pairs(species, cnt9, clock, rate9, acc9, speed, gen,
              uv, field_of, tab,
              pair_i, pair_j, pair_coef, pair_grp, pair_ci, pair_cj, pair_ki, pair_kj,
              vel, ngroups,
              loc_w, loc_sp, loc_grp, nloc,
              sample_times):
    """Time integrals of bilinear forms in tracked Fourier coefficients.

    Pair p contributes coef_p * c[i_p] * c[j_p] * e_{k_i}(S_i/N) e_{k_j}(S_j/N),
    where S_i = sum of the floor positions of the clocks listed in
    pair_ci[p] (entries -1 are ignored) and likewise for S_j.  Clocks move
    with velocities ``vel`` (sites per unit time).

    Optionally ``nloc`` local bond sums sum_y w[y] abar_y bbar_{y+1} are
    integrated exactly (loc_sp[q] = (alpha, beta, rho_alpha, rho_beta)
    encoded as floats) into group loc_grp[q].

    Returns the integral of each group up to every sample time, and the
    group integrand at each sample time.
    """
    n = species.shape[0]
    nm = tab.shape[1]
    npairs = pair_i.shape[0]
    nclk = vel.shape[0]
    ns = sample_times.shape[0]
    c = lab_coefficients(species, uv, field_of, tab)
    pos = np.zeros(nclk, np.int64)
    nxt = np.empty(nclk, np.float64)
    t = clock[0]
    for q in range(nclk):
        pos[q] = int(np.floor(vel[q] * t))
        if vel[q] > 0.0:
            nxt[q] = (pos[q] + 1) / vel[q]
        elif vel[q] < 0.0:
            nxt[q] = pos[q] / vel[q]
        else:
            nxt[q] = np.inf
    ph = np.empty(npairs, np.complex128)
    ncl_i = pair_ci.shape[1]

    # phases
    for p in range(npairs):
        si = 0
        sj = 0
        for r in range(ncl_i):
            if pair_ci[p, r] >= 0:
                si += pos[pair_ci[p, r]]
            if pair_cj[p, r] >= 0:
                sj += pos[pair_cj[p, r]]
        arg = ((pair_ki[p] * si) % n + (pair_kj[p] * sj) % n) % n
        ph[p] = pair_coef[p] * np.exp(1j * TWO_PI * arg / n)
    integrand = np.zeros(ngroups, np.complex128)
    for p in range(npairs):
        integrand[pair_grp[p]] += ph[p] * c[pair_i[p]] * c[pair_j[p]]
    # local bond sums
    loc = np.zeros(nloc, np.complex128)
    for q in range(nloc):
        al = int(loc_sp[q, 0])
        be = int(loc_sp[q, 1])
        s = 0j
        for y in range(n):
            yp = y + 1 if y + 1 < n else 0
            s += loc_w[q, y] * (_occ(species[y], al) - loc_sp[q, 2]) * (_occ(species[yp], be) - loc_sp[q, 3])
        loc[q] = s
    for q in range(nloc):
        integrand[loc_grp[q]] += loc[q]
    acc = np.zeros(ngroups, np.complex128)
    out = np.zeros((ns, ngroups), np.complex128)
    snap = np.zeros((ns, ngroups), np.complex128)
    inv_n = 1.0 / n
    k = 0
    while k < ns:
        tn = _pending(clock, cnt9, rate9, speed, gen)
        qs = -1
        tshift = np.inf
        for q in range(nclk):
            if nxt[q] < tshift:
                tshift = nxt[q]
                qs = q
        tsamp = sample_times[k]
        if tsamp <= tshift and tsamp <= tn:
            for g in range(ngroups):
                acc[g] += integrand[g] * (tsamp - t)
                out[k, g] = acc[g]
                snap[k, g] = integrand[g]
            t = tsamp
            k += 1
            continue
        if tshift <= tn:
            for g in range(ngroups):
                acc[g] += integrand[g] * (tshift - t)
            t = tshift
            if vel[qs] > 0.0:
                pos[qs] += 1
                nxt[qs] = (pos[qs] + 1) / vel[qs]
            else:
                pos[qs] -= 1
                nxt[qs] = pos[qs] / vel[qs]
            for g in range(ngroups):
                integrand[g] = 0j
            for p in range(npairs):
                si = 0
                sj = 0
                for r in range(ncl_i):
                    if pair_ci[p, r] >= 0:
                        si += pos[pair_ci[p, r]]
                    if pair_cj[p, r] >= 0:
                        sj += pos[pair_cj[p, r]]
                arg = ((pair_ki[p] * si) % n + (pair_kj[p] * sj) % n) % n
                ph[p] = pair_coef[p] * np.exp(1j * TWO_PI * arg / n)
                integrand[pair_grp[p]] += ph[p] * c[pair_i[p]] * c[pair_j[p]]
            for q in range(nloc):
                integrand[loc_grp[q]] += loc[q]
            continue
        for g in range(ngroups):
            acc[g] += integrand[g] * (tn - t)
        x = _select_bond(species, acc9, n, gen)
        xm = x - 1 if x > 0 else n - 1
        xp = x + 1 if x + 1 < n else 0
        b = species[x]
        cc = species[xp]
        for j in range(nm):
            f = field_of[j]
            d = uv[f, cc] - uv[f, b]
            if d != 0.0:
                c[j] += d * inv_n * (tab[x, j] - tab[xp, j])
        # local sums: bonds xm, x, xp change
        for q in range(nloc):
            al = int(loc_sp[q, 0])
            be = int(loc_sp[q, 1])
            ra = loc_sp[q, 2]
            rb = loc_sp[q, 3]
            xpp = xp + 1 if xp + 1 < n else 0
            old = (loc_w[q, xm] * (_occ(species[xm], al) - ra) * (_occ(species[x], be) - rb)
                   + loc_w[q, x] * (_occ(species[x], al) - ra) * (_occ(species[xp], be) - rb)
                   + loc_w[q, xp] * (_occ(species[xp], al) - ra) * (_occ(species[xpp], be) - rb))
            new = (loc_w[q, xm] * (_occ(species[xm], al) - ra) * (_occ(cc, be) - rb)
                   + loc_w[q, x] * (_occ(cc, al) - ra) * (_occ(b, be) - rb)
                   + loc_w[q, xp] * (_occ(b, al) - ra) * (_occ(species[xpp], be) - rb))
            loc[q] += new - old
        _swap(species, cnt9, x, n)
        clock[0] = tn
        clock[1] = -1.0
        t = tn
        for g in range(ngroups):
            integrand[g] = 0j
        for p in range(npairs):
            integrand[pair_grp[p]] += ph[p] * c[pair_i[p]] * c[pair_j[p]]
        for q in range(nloc):
            integrand[loc_grp[q]] += loc[q]
    clock[0] = t
    return out, snap


# ------------------------------------------- block-average replacement -----

@njit(cache=True)
def _block_init(species, sp, rho, width, right):
    """Un-normalized one-sided block sums of centred occupation of ``sp``."""
    n = species.shape[0]
    out = np.zeros(n)
    for x in range(n):
        s = 0.0
        for d in range(1, width + 1):
            y = (x + d) % n if right else (x - d) % n
            s += _occ(species[y], sp) - rho
        out[x] = s
    return out


@njit(cache=True)
def run_block_replacement(species, cnt9, clock, rate9, acc9, speed, gen,
                          alpha, beta, rho_a, rho_b, widths, chi, weight, sample_times):
    """Integrate sum_x w(x) [abar_x bbar_{x+1} - P_L(x)] for several block widths L.

    For alpha != beta, P_L(x) = (right beta block)(left alpha block);
    for alpha == beta, P_L(x) = (right alpha block)^2 - chi / L.
    Blocks are one-sided averages of centred occupations over L sites.
    Returns integrals [S, n_widths] (complex).
    """
    n = species.shape[0]
    nw = widths.shape[0]
    ns = sample_times.shape[0]
    same = alpha == beta
    rb = np.zeros((nw, n))
    lb = np.zeros((nw, n))
    for j in range(nw):
        rb[j] = _block_init(species, beta, rho_b, widths[j], True)
        if not same:
            lb[j] = _block_init(species, alpha, rho_a, widths[j], False)
    # integrand pieces
    loc = 0j
    for y in range(n):
        yp = y + 1 if y + 1 < n else 0
        loc += weight[y] * (_occ(species[y], alpha) - rho_a) * (_occ(species[yp], beta) - rho_b)
    blk = np.zeros(nw, np.complex128)
    wsum = 0j
    for y in range(n):
        wsum += weight[y]
    for j in range(nw):
        L = widths[j]
        s = 0j
        for y in range(n):
            if same:
                s += weight[y] * (rb[j, y] * rb[j, y] / (L * L))
            else:
                s += weight[y] * (rb[j, y] * lb[j, y] / (L * L))
        if same:
            s -= wsum * chi / L
        blk[j] = s
    acc = np.zeros(nw, np.complex128)
    out = np.zeros((ns, nw), np.complex128)
    t = clock[0]
    k = 0
    while k < ns:
        tn = _pending(clock, cnt9, rate9, speed, gen)
        tsamp = sample_times[k]
        if tsamp <= tn:
            for j in range(nw):
                acc[j] += (loc - blk[j]) * (tsamp - t)
                out[k, j] = acc[j]
            t = tsamp
            k += 1
            continue
        for j in range(nw):
            acc[j] += (loc - blk[j]) * (tn - t)
        x = _select_bond(species, acc9, n, gen)
        xm = x - 1 if x > 0 else n - 1
        xp = x + 1 if x + 1 < n else 0
        xpp = xp + 1 if xp + 1 < n else 0
        b = species[x]
        c = species[xp]
        old = (weight[xm] * (_occ(species[xm], alpha) - rho_a) * (_occ(b, beta) - rho_b)
               + weight[x] * (_occ(b, alpha) - rho_a) * (_occ(c, beta) - rho_b)
               + weight[xp] * (_occ(c, alpha) - rho_a) * (_occ(species[xpp], beta) - rho_b))
        new = (weight[xm] * (_occ(species[xm], alpha) - rho_a) * (_occ(c, beta) - rho_b)
               + weight[x] * (_occ(c, alpha) - rho_a) * (_occ(b, beta) - rho_b)
               + weight[xp] * (_occ(b, alpha) - rho_a) * (_occ(species[xpp], beta) - rho_b))
        loc += new - old
        # occupation changes: site x gets c, site xp gets b
        db_x = _occ(c, beta) - _occ(b, beta)      # change at x of beta occupation
        da_x = _occ(c, alpha) - _occ(b, alpha)
        if db_x != 0.0 or da_x != 0.0:
            for j in range(nw):
                L = widths[j]
                inv = 1.0 / (L * L)
                # right blocks containing x but not xp: window start x-L; containing xp not x: start x
                # site x is in right blocks starting at x-L..x-1, xp in x-L+1..x
                # net change only at starts x-L (gains x only) and x (gains xp only)
                p1 = (x - L) % n
                p2 = x
                for p, dv in ((p1, db_x), (p2, -db_x)):
                    if dv != 0.0:
                        old_r = rb[j, p]
                        new_r = old_r + dv
                        if same:
                            blk[j] += weight[p] * (new_r * new_r - old_r * old_r) * inv
                        else:
                            blk[j] += weight[p] * (new_r - old_r) * lb[j, p] * inv
                        rb[j, p] = new_r
                if not same and da_x != 0.0:
                    # left blocks at p cover p-L..p-1: x in x+1..x+L, xp in x+2..x+L+1
                    # net change at start x+1 (contains x only) and x+L+1 (contains xp only)
                    q1 = xp
                    q2 = (x + L + 1) % n
                    for p, dv in ((q1, da_x), (q2, -da_x)):
                        old_l = lb[j, p]
                        new_l = old_l + dv
                        blk[j] += weight[p] * rb[j, p] * (new_l - old_l) * inv
                        lb[j, p] = new_l
        _swap(species, cnt9, x, n)
        clock[0] = tn
        clock[1] = -1.0
        t = tn
    clock[0] = t
    return out
