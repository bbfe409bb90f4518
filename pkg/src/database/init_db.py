import logging
from pathlib import Path
from typing import Tuple

from sqlalchemy import create_engine

from .models import Base, EigenvalueRecord, Run

logger = logging.getLogger(__name__)


def create_tables(engine):
    """Drop and recreate the archive tables"""
    EigenvalueRecord.__table__.drop(engine, checkfirst=True)
    Run.__table__.drop(engine, checkfirst=True)
    Base.metadata.create_all(engine)


def initialize_database(db_path: Path) -> Tuple[bool, str]:
    """Create an empty results archive, replacing any existing tables"""
    try:
        db_path = Path(db_path)
        db_path.parent.mkdir(parents=True, exist_ok=True)
        engine = create_engine(f'sqlite:///{db_path}')
        create_tables(engine)
        engine.dispose()
        logger.info("initialized results archive %s", db_path)
        return True, "Database initialized successfully"
    except Exception as e:
        return False, f"Error initializing database: {str(e)}"
