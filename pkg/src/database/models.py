from datetime import datetime, timezone

from sqlalchemy import Boolean, Column, DateTime, Float, ForeignKey, Integer, String, Text, UniqueConstraint, create_engine
from sqlalchemy.orm import declarative_base, relationship, sessionmaker

Base = declarative_base()


def _now():
    return datetime.now(timezone.utc)


class Run(Base):
    __tablename__ = 'runs'

    id = Column(Integer, primary_key=True)
    command = Column(String, nullable=False)       # e.g. "solve", "sweep"
    theta_rad = Column(Float, nullable=False)
    theta_deg = Column(Float, nullable=False)
    beta_deg = Column(Float, nullable=False)
    m = Column(Integer, nullable=False, default=0)
    s_max = Column(Float)
    ndof = Column(Integer)
    mesh_h = Column(Float)
    config_json = Column(Text)
    status = Column(String, default="ok")
    created_at = Column(DateTime, default=_now)

    # Relationships
    eigenvalues = relationship("EigenvalueRecord", back_populates="run", cascade="all, delete-orphan",
                               order_by="EigenvalueRecord.j")


class EigenvalueRecord(Base):
    __tablename__ = 'eigenvalues'

    id = Column(Integer, primary_key=True)
    run_id = Column(Integer, ForeignKey('runs.id', ondelete='CASCADE'), nullable=False)
    j = Column(Integer, nullable=False)
    value = Column(Float, nullable=False)
    residual = Column(Float)
    error_estimate = Column(Float)
    converged = Column(Boolean, default=True)

    # Relationships
    run = relationship("Run", back_populates="eigenvalues")

    # Constraints
    __table_args__ = (
        UniqueConstraint('run_id', 'j', name='uix_eigenvalue_run_branch'),
    )


def init_database(db_path: str):
    """Open (and create if needed) the archive at ``db_path``"""
    engine = create_engine(f'sqlite:///{db_path}')
    Base.metadata.create_all(engine)
    return engine


def get_session(engine):
    """Create a new session factory"""
    return sessionmaker(bind=engine, expire_on_commit=False)
