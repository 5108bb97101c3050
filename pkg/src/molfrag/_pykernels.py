"""Pure-Python fallback for ``_ckernels``; same signatures, same results."""


def _embed(plan, batch, start, stop, on_full):
    """Enumerate injective label/bond-preserving maps; ``on_full`` returns True to stop."""
    k = plan.k
    plab = plan.labels_l
    anchor = plan.anchor_l
    abond = plan.abond_l
    chk_ptr = plan.chk_ptr_l
    chk_v = plan.chk_v_l
    chk_b = plan.chk_b_l
    mlab = batch.labels_l
    adj = batch.adj_l
    mapping = [0] * k
    inv = {}

    def rec(i):
        if i == k:
            return on_full(mapping, inv)
        ma = mapping[anchor[i]]
        want_lab = plab[i]
        want_bond = abond[i]
        for w, b in adj[ma]:
            if b != want_bond or w in inv or mlab[w] != want_lab:
                continue
            ok = True
            for c in range(chk_ptr[i], chk_ptr[i + 1]):
                x = mapping[chk_v[c]]
                need = chk_b[c]
                for y, bb in adj[w]:
                    if y == x:
                        if bb != need:
                            ok = False
                        break
                else:
                    ok = False
                if not ok:
                    break
            if not ok:
                continue
            mapping[i] = w
            inv[w] = i
            stop_now = rec(i + 1)
            del inv[w]
            if stop_now:
                return True
        return False

    for v in range(start, stop):
        if mlab[v] != plab[0]:
            continue
        mapping[0] = v
        inv[v] = 0
        stop_now = rec(1)
        del inv[v]
        if stop_now:
            return True
    return False


def extensions(plan, batch, mol_ids, fwd, bwd_src, bwd, nl1):
    k = plan.k
    kp1 = k + 1
    padj = plan.padj_l
    mlab = batch.labels_l
    adj = batch.adj_l
    fwd_src = [s for s in range(k) if fwd[s]]
    bwd_ok = [bool(x) for x in bwd]
    out = {}
    for m in mol_ids.tolist():
        found = set()

        def collect(mapping, inv):
            for s in fwd_src:
                base = s * kp1 * 5
                for w, b in adj[mapping[s]]:
                    if w not in inv:
                        found.add(((base + b) * nl1) + mlab[w] + 1)
            if bwd_src >= 0:
                for w, b in adj[mapping[bwd_src]]:
                    j = inv.get(w)
                    if j is not None and bwd_ok[j] and not padj[bwd_src * k + j]:
                        found.add(((bwd_src * kp1 + j + 1) * 5 + b) * nl1)
            return False

        _embed(plan, batch, batch.vstart_l[m], batch.vstart_l[m + 1], collect)
        for key in found:
            lst = out.get(key)
            if lst is None:
                out[key] = [m]
            else:
                lst.append(m)
    return out


def occurs_many(plan, batch, mol_ids):
    stop = lambda mapping, inv: True  # noqa: E731
    return [
        1 if _embed(plan, batch, batch.vstart_l[m], batch.vstart_l[m + 1], stop) else 0
        for m in mol_ids.tolist()
    ]


def walk_keys(batch, mol, max_len):
    mlab = batch.labels_l
    adj = batch.adj_l
    out = set()
    seq = []

    def rec(v, prev, depth):
        for w, b in adj[v]:
            if w == prev:
                continue
            seq.append(b)
            seq.append(mlab[w])
            rev = seq[::-1]
            if seq <= rev:
                out.add(tuple(seq))
            if depth + 1 < max_len:
                rec(w, v, depth + 1)
            del seq[-2:]

    for v in range(batch.vstart_l[mol], batch.vstart_l[mol + 1]):
        seq.append(mlab[v])
        rec(v, -1, 0)
        seq.pop()
    return out
