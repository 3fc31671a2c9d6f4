import io
import os
from concurrent.futures import ThreadPoolExecutor
from hashlib import sha256

import zstandard

workers_env_var = "MFDEPTH_WORKERS"


def derive_seed(seed, *labels):
    """
    Derive a stage- or replicate-specific seed from the global seed. The derivation only depends on the seed and
    the labels, so any stage can be rerun in isolation.
    """
    key = "/".join([str(seed)] + [str(label) for label in labels])
    return int.from_bytes(sha256(key.encode()).digest()[:8], "big")


def default_workers():
    try:
        return max(1, int(os.environ.get(workers_env_var, "1")))
    except ValueError:
        return 1


def parallel_map(fn, items, workers=1):
    if workers is None or workers <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, items))


def open_text(path, mode="rt"):
    """
    Open a text file for reading or writing. Paths ending in ``.zst`` are transparently (de)compressed.
    """
    path = os.fspath(path)
    if path.endswith(".zst"):
        if "r" in mode:
            with open(path, "rb") as fh:
                data = zstandard.ZstdDecompressor().decompressobj().decompress(fh.read())
            return io.StringIO(data.decode("utf-8"))
        return _ZstdTextWriter(path)
    return open(path, mode.replace("t", ""), encoding="utf-8", newline="")


class _ZstdTextWriter(io.StringIO):
    def __init__(self, path):
        super().__init__(newline="")
        self.path = path

    def close(self):
        if not self.closed:
            with open(self.path, "wb") as fh:
                fh.write(zstandard.ZstdCompressor().compress(self.getvalue().encode("utf-8")))
        super().close()
