# cython: language_level=3
"""Compiled kernels mirroring weibosent._purepy."""

from libc.stdlib cimport calloc, free
from libc.stdint cimport uint64_t

import hashlib
import unicodedata

cdef int SKIPPED = -2
cdef int FIRST = -1

cdef object _is_normalized = unicodedata.is_normalized
cdef object _normalize = unicodedata.normalize
cdef object _blake2b = hashlib.blake2b


def content_digest(bytes data):
    return _blake2b(data, digest_size=16).digest()


cpdef str normalize_content(str text):
    cdef Py_UCS4 c
    cdef bint has_space = False
    if not _is_normalized("NFC", text):
        text = _normalize("NFC", text)
    for c in text:
        if c.isspace():
            has_space = True
            break
    if not has_space:
        return text
    return "".join(text.split())


def char_counts(texts, bint strip_whitespace=False):
    cdef uint64_t *bmp = <uint64_t *> calloc(65536, sizeof(uint64_t))
    cdef dict astral = {}
    cdef Py_UCS4 c
    cdef Py_ssize_t i
    cdef str text
    if bmp == NULL:
        raise MemoryError()
    try:
        for text in texts:
            for c in text:
                if strip_whitespace and c.isspace():
                    continue
                if c < 65536:
                    bmp[c] += 1
                else:
                    astral[c] = astral.get(c, 0) + 1
        out = {}
        for i in range(65536):
            if bmp[i]:
                out[chr(i)] = bmp[i]
        out.update(astral)
        return out
    finally:
        free(bmp)


def group_duplicates(contents, skip, digest=None):
    cdef Py_ssize_t i, n = len(contents)
    cdef list out = [SKIPPED] * n
    cdef dict groups = {}
    cdef list bucket
    cdef str key
    cdef bint matched
    if digest is None:
        digest = content_digest
    for i in range(n):
        if skip[i]:
            continue
        key = normalize_content(contents[i])
        h = digest(key.encode("utf-8"))
        bucket = groups.get(h)
        if bucket is None:
            groups[h] = [i]
            out[i] = FIRST
            continue
        matched = False
        for canon in bucket:
            if normalize_content(contents[canon]) == key:
                out[i] = canon
                matched = True
                break
        if not matched:
            bucket.append(i)
            out[i] = FIRST
    return out
