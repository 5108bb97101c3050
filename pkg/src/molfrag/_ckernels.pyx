# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled matching kernels; ``_pykernels`` mirrors every function here."""

from libc.stdlib cimport malloc, free


cdef struct Ctx:
    int k
    const int* plab
    const int* anchor
    const int* abond
    const int* chk_ptr
    const int* chk_v
    const int* chk_b
    const unsigned char* padj
    const int* mlab
    const int* indptr
    const int* nbr
    const int* bond
    int* mapping
    int* inv
    # extension collection
    const unsigned char* fwd
    const unsigned char* bwd
    int bwd_src
    long long nl1
    int mode  # 0: stop at first embedding, 1: collect extensions


cdef inline bint _edge_ok(Ctx* c, int w, int x, int need):
    cdef int q
    for q in range(c.indptr[w], c.indptr[w + 1]):
        if c.nbr[q] == x:
            return c.bond[q] == need
    return False


cdef int _collect(Ctx* c, set found) except -1:
    cdef int s, p, w, j, ms
    cdef long long kp1 = c.k + 1
    for s in range(c.k):
        if not c.fwd[s]:
            continue
        ms = c.mapping[s]
        for p in range(c.indptr[ms], c.indptr[ms + 1]):
            w = c.nbr[p]
            if c.inv[w] < 0:
                found.add(((s * kp1 * 5 + c.bond[p]) * c.nl1) + c.mlab[w] + 1)
    if c.bwd_src >= 0:
        ms = c.mapping[c.bwd_src]
        for p in range(c.indptr[ms], c.indptr[ms + 1]):
            w = c.nbr[p]
            j = c.inv[w]
            if j >= 0 and c.bwd[j] and not c.padj[c.bwd_src * c.k + j]:
                found.add(((c.bwd_src * kp1 + j + 1) * 5 + c.bond[p]) * c.nl1)
    return 0


cdef int _rec(Ctx* c, int i, set found) except -1:
    """Returns 1 when the search should stop."""
    cdef int ma, p, w, cc, r
    cdef bint ok
    if i == c.k:
        if c.mode == 0:
            return 1
        _collect(c, found)
        return 0
    ma = c.mapping[c.anchor[i]]
    for p in range(c.indptr[ma], c.indptr[ma + 1]):
        w = c.nbr[p]
        if c.bond[p] != c.abond[i] or c.inv[w] >= 0 or c.mlab[w] != c.plab[i]:
            continue
        ok = True
        for cc in range(c.chk_ptr[i], c.chk_ptr[i + 1]):
            if not _edge_ok(c, w, c.mapping[c.chk_v[cc]], c.chk_b[cc]):
                ok = False
                break
        if not ok:
            continue
        c.mapping[i] = w
        c.inv[w] = i
        r = _rec(c, i + 1, found)
        c.inv[w] = -1
        if r:
            return 1
    return 0


cdef int _embed(Ctx* c, int start, int stop, set found) except -1:
    cdef int v, r
    for v in range(start, stop):
        if c.mlab[v] != c.plab[0]:
            continue
        c.mapping[0] = v
        c.inv[v] = 0
        r = _rec(c, 1, found)
        c.inv[v] = -1
        if r:
            return 1
    return 0


cdef class _Buffers:
    """Keeps the memoryviews alive while raw pointers are in use."""
    cdef const int[::1] plab, anchor, abond, chk_ptr, chk_v, chk_b
    cdef const unsigned char[::1] padj
    cdef const int[::1] mlab, indptr, nbr, bond, vstart
    cdef int dummy_i
    cdef unsigned char dummy_u

    def __init__(self, plan, batch):
        self.plab = plan.labels
        self.anchor = plan.anchor
        self.abond = plan.abond
        self.chk_ptr = plan.chk_ptr
        self.chk_v = plan.chk_v
        self.chk_b = plan.chk_b
        self.padj = plan.padj
        self.mlab = batch.labels
        self.indptr = batch.indptr
        self.nbr = batch.nbr
        self.bond = batch.bond
        self.vstart = batch.vstart


cdef inline const int* _iptr(const int[::1] mv, int* dummy):
    return &mv[0] if mv.shape[0] > 0 else dummy


cdef inline const unsigned char* _uptr(const unsigned char[::1] mv, unsigned char* dummy):
    return &mv[0] if mv.shape[0] > 0 else dummy


cdef void _fill(Ctx* c, _Buffers b, int k):
    c.k = k
    c.plab = _iptr(b.plab, &b.dummy_i)
    c.anchor = _iptr(b.anchor, &b.dummy_i)
    c.abond = _iptr(b.abond, &b.dummy_i)
    c.chk_ptr = _iptr(b.chk_ptr, &b.dummy_i)
    c.chk_v = _iptr(b.chk_v, &b.dummy_i)
    c.chk_b = _iptr(b.chk_b, &b.dummy_i)
    c.padj = _uptr(b.padj, &b.dummy_u)
    c.mlab = _iptr(b.mlab, &b.dummy_i)
    c.indptr = _iptr(b.indptr, &b.dummy_i)
    c.nbr = _iptr(b.nbr, &b.dummy_i)
    c.bond = _iptr(b.bond, &b.dummy_i)


def extensions(plan, batch, const int[::1] mol_ids, const unsigned char[::1] fwd,
               int bwd_src, const unsigned char[::1] bwd, long long nl1):
    cdef _Buffers b = _Buffers(plan, batch)
    cdef Ctx c
    cdef int k = plan.k
    cdef int nv = b.mlab.shape[0]
    cdef int i, m
    cdef dict out = {}
    cdef set found
    cdef list lst
    _fill(&c, b, k)
    c.fwd = &fwd[0]
    c.bwd = &bwd[0]
    c.bwd_src = bwd_src
    c.nl1 = nl1
    c.mode = 1
    c.mapping = <int*> malloc(k * sizeof(int))
    c.inv = <int*> malloc((nv + 1) * sizeof(int))
    if c.mapping == NULL or c.inv == NULL:
        free(c.mapping)
        free(c.inv)
        raise MemoryError()
    try:
        for i in range(nv):
            c.inv[i] = -1
        for i in range(mol_ids.shape[0]):
            m = mol_ids[i]
            found = set()
            _embed(&c, b.vstart[m], b.vstart[m + 1], found)
            for key in found:
                lst = out.get(key)
                if lst is None:
                    out[key] = [m]
                else:
                    lst.append(m)
    finally:
        free(c.mapping)
        free(c.inv)
    return out


def occurs_many(plan, batch, const int[::1] mol_ids):
    cdef _Buffers b = _Buffers(plan, batch)
    cdef Ctx c
    cdef int k = plan.k
    cdef int nv = b.mlab.shape[0]
    cdef int i, m
    cdef unsigned char zero = 0
    cdef list res = [0] * mol_ids.shape[0]
    _fill(&c, b, k)
    c.fwd = &zero
    c.bwd = &zero
    c.bwd_src = -1
    c.nl1 = 1
    c.mode = 0
    c.mapping = <int*> malloc(k * sizeof(int))
    c.inv = <int*> malloc((nv + 1) * sizeof(int))
    if c.mapping == NULL or c.inv == NULL:
        free(c.mapping)
        free(c.inv)
        raise MemoryError()
    try:
        for i in range(nv):
            c.inv[i] = -1
        for i in range(mol_ids.shape[0]):
            m = mol_ids[i]
            res[i] = _embed(&c, b.vstart[m], b.vstart[m + 1], None)
    finally:
        free(c.mapping)
        free(c.inv)
    return res


cdef int _walk(const int* mlab, const int* indptr, const int* nbr, const int* bond,
               int* seq, int v, int prev, int depth, int max_len, set out) except -1:
    cdef int p, w, n, a, cmp
    for p in range(indptr[v], indptr[v + 1]):
        w = nbr[p]
        if w == prev:
            continue
        n = 2 * depth + 1
        seq[n] = bond[p]
        seq[n + 1] = mlab[w]
        n += 2
        cmp = 0
        for a in range(n):
            if seq[a] != seq[n - 1 - a]:
                cmp = -1 if seq[a] < seq[n - 1 - a] else 1
                break
        if cmp <= 0:
            out.add(tuple([seq[a] for a in range(n)]))
        if depth + 1 < max_len:
            _walk(mlab, indptr, nbr, bond, seq, w, v, depth + 1, max_len, out)
    return 0


def walk_keys(batch, int mol, int max_len):
    cdef const int[::1] mlab = batch.labels
    cdef const int[::1] indptr = batch.indptr
    cdef const int[::1] nbr = batch.nbr
    cdef const int[::1] bond = batch.bond
    cdef const int[::1] vstart = batch.vstart
    cdef set out = set()
    cdef int v
    cdef int* seq
    if max_len < 1 or nbr.shape[0] == 0:
        return out
    seq = <int*> malloc((2 * max_len + 1) * sizeof(int))
    if seq == NULL:
        raise MemoryError()
    try:
        for v in range(vstart[mol], vstart[mol + 1]):
            seq[0] = mlab[v]
            _walk(&mlab[0], &indptr[0], &nbr[0], &bond[0], seq, v, -1, 0, max_len, out)
    finally:
        free(seq)
    return out
