import pytest

from todpipe import fixtures


@pytest.fixture(scope="session")
def db():
    return fixtures.build_fixture_db()


@pytest.fixture(scope="session")
def corpus10(db):
    return fixtures.build_fixture_corpus(10, seed=0, db=db)


@pytest.fixture()
def corpus_paths(tmp_path, db, corpus10):
    from todpipe import corpus as cm
    from todpipe import dbquery
    cp = tmp_path / "corpus.json"
    dbp = tmp_path / "db.json"
    cm.write_canonical(corpus10, cp)
    dbquery.write_db(db, dbp)
    return {"corpus": str(cp), "db": str(dbp), "dir": tmp_path}
