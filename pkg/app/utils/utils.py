# file: app/utils/utils.py
import hashlib
import os


def getenv_str(key: str, default: str | None = None) -> str | None:
    return os.getenv(key, default)


def getenv_app_env():
    return getenv_str("APP_ENV", "test")


def get_dotenv_name():
    return f".env.{getenv_app_env()}"


def stable_hash(*parts: object) -> int:
    """64-bit hash of ``parts`` that is stable across processes and platforms."""
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(str(part).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


def derive_seed(master: int, *streams: object) -> int:
    """Seed of the named random stream ``streams`` under ``master``.

    All randomness flows from one master seed; each stage asks for its own
    stream so re-running a single stage reproduces its draws.
    """
    return stable_hash(int(master), *streams)
