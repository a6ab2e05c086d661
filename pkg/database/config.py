import os
from typing import Callable, Iterator, Optional

from sqlalchemy import create_engine
from sqlalchemy.engine import Engine
from sqlalchemy.orm import Session, declarative_base, sessionmaker

# 创建基类
Base = declarative_base()

# 运行记录库, 未设置时不记录
DATABASE_URL_ENV = "LINDBLAD_DB_URL"


def get_database_url() -> Optional[str]:
    return os.getenv(DATABASE_URL_ENV) or None


def get_engine(database_url: str) -> Engine:
    """创建引擎; sqlite 允许跨线程"""
    return create_engine(
        database_url,
        connect_args={"check_same_thread": False} if database_url.startswith("sqlite") else {}
    )


def get_session_factory(engine: Engine) -> Callable[[], Session]:
    return sessionmaker(autocommit=False, autoflush=False, bind=engine)


def get_db(session_factory: Callable[[], Session]) -> Iterator[Session]:
    db = session_factory()
    try:
        yield db
    finally:
        db.close()


__all__ = ['Base', 'DATABASE_URL_ENV', 'get_database_url', 'get_engine', 'get_session_factory', 'get_db']
