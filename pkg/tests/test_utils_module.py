from app.utils import utils


def test_getenv_str(monkeypatch):
    monkeypatch.setenv("SOME_VALUE", "abc")
    assert utils.getenv_str("SOME_VALUE") == "abc"
    assert utils.getenv_str("MISSING_VALUE", "fallback") == "fallback"


def test_getenv_app_env(monkeypatch):
    monkeypatch.delenv("APP_ENV", raising=False)
    assert utils.getenv_app_env() == "test"

    monkeypatch.setenv("APP_ENV", "prod")
    assert utils.getenv_app_env() == "prod"


def test_get_dotenv_name(monkeypatch):
    monkeypatch.setenv("APP_ENV", "staging")
    assert utils.get_dotenv_name() == ".env.staging"


def test_stable_hash_is_fixed():
    assert utils.stable_hash("a", 1) == utils.stable_hash("a", 1)
    assert utils.stable_hash("a", 1) != utils.stable_hash("a", 2)
    # parts are separated, so concatenation does not collide
    assert utils.stable_hash("ab", "c") != utils.stable_hash("a", "bc")
    assert 0 <= utils.stable_hash("x") < 2**64


def test_derive_seed_streams():
    assert utils.derive_seed(7, "split", 0) == utils.derive_seed(7, "split", 0)
    assert utils.derive_seed(7, "split", 0) != utils.derive_seed(7, "split", 1)
    assert utils.derive_seed(7, "split", 0) != utils.derive_seed(8, "split", 0)
