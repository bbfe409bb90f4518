import json
import logging
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from .models import EigenvalueRecord, Run, get_session, init_database

logger = logging.getLogger(__name__)


def _float(value) -> Optional[float]:
    return None if value is None or not np.isfinite(value) else float(value)


class ResultsDatabase:
    """Archive of layer solves: one ``Run`` per angle and its eigenvalue rows"""

    def __init__(self, db_path: str):
        self.engine = init_database(db_path)
        self.Session = get_session(self.engine)

    def get_session(self):
        """Get a new session"""
        return self.Session()

    def close(self):
        """Release pooled connections"""
        self.engine.dispose()

    def record_spectrum(self, command: str, result, config: Optional[dict] = None,
                        mesh_h: Optional[float] = None) -> Tuple[bool, str, Optional[int]]:
        """Store a layer result (see ``analysis.layer.LayerResult``)"""
        session = self.get_session()
        try:
            ap = result.aperture
            run = Run(
                command=command,
                theta_rad=ap.theta,
                theta_deg=ap.theta_deg,
                beta_deg=ap.beta_deg,
                m=result.m,
                s_max=result.s_max,
                ndof=result.n_dof,
                mesh_h=mesh_h,
                config_json=json.dumps(config or {}, sort_keys=True, default=str),
            )
            converged = result.converged
            for j, value in enumerate(result.eigenvalues):
                run.eigenvalues.append(EigenvalueRecord(
                    j=j + 1,
                    value=float(value),
                    residual=_float(result.spectrum.relative_residuals[j]),
                    error_estimate=_float(result.error_estimates[j]),
                    converged=bool(converged[j]),
                ))
            session.add(run)
            session.commit()
            run_id = run.id
            session.close()
            return True, "Run recorded successfully", run_id
        except Exception as e:
            session.rollback()
            session.close()
            return False, f"Error recording run: {str(e)}", None

    def record_failure(self, command: str, aperture, m: int, message: str) -> Tuple[bool, str, Optional[int]]:
        """Store an angle whose solve failed, without eigenvalues"""
        session = self.get_session()
        try:
            run = Run(command=command, theta_rad=aperture.theta, theta_deg=aperture.theta_deg,
                      beta_deg=aperture.beta_deg, m=m, status=f"failed: {message}")
            session.add(run)
            session.commit()
            run_id = run.id
            session.close()
            return True, "Failure recorded", run_id
        except Exception as e:
            session.rollback()
            session.close()
            return False, f"Error recording failure: {str(e)}", None

    def get_run(self, run_id: int) -> Optional[Run]:
        """Get a run by ID"""
        session = self.get_session()
        try:
            run = session.get(Run, run_id)
            session.close()
            return run
        except Exception as e:
            logger.error("Error getting run: %s", e)
            session.close()
            return None

    def get_runs(self, m: Optional[int] = None) -> List[Run]:
        """All runs ordered by angle, optionally for one partial wave"""
        session = self.get_session()
        try:
            query = session.query(Run)
            if m is not None:
                query = query.filter_by(m=m)
            runs = query.order_by(Run.theta_rad, Run.id).all()
            session.close()
            return runs
        except Exception as e:
            logger.error("Error getting runs: %s", e)
            session.close()
            return []

    def get_eigenvalues(self, run_id: int) -> List[EigenvalueRecord]:
        """Eigenvalue rows of a run in branch order"""
        session = self.get_session()
        try:
            rows = session.query(EigenvalueRecord).filter_by(run_id=run_id).order_by(EigenvalueRecord.j).all()
            session.close()
            return rows
        except Exception as e:
            logger.error("Error getting eigenvalues: %s", e)
            session.close()
            return []

    def delete_run(self, run_id: int) -> Tuple[bool, str]:
        """Delete a run and its eigenvalues"""
        session = self.get_session()
        try:
            run = session.get(Run, run_id)
            if not run:
                session.close()
                return False, f"Run with ID {run_id} not found"
            session.delete(run)
            session.commit()
            session.close()
            return True, "Run deleted successfully"
        except Exception as e:
            session.rollback()
            session.close()
            return False, f"Error deleting run: {str(e)}"

    def branch_history(self, j: int, m: int = 0) -> pd.DataFrame:
        """lambda_j against the angle over every archived run"""
        session = self.get_session()
        try:
            query = (
                session.query(Run.theta_rad, Run.theta_deg, Run.beta_deg, EigenvalueRecord.value,
                              EigenvalueRecord.converged, Run.id)
                .join(EigenvalueRecord, EigenvalueRecord.run_id == Run.id)
                .filter(EigenvalueRecord.j == j, Run.m == m)
                .order_by(Run.theta_rad, Run.id)
            )
            frame = pd.DataFrame(query.all(), columns=["theta_rad", "theta_deg", "beta_deg", "lambda", "converged", "run_id"])
            session.close()
            return frame
        except Exception as e:
            logger.error("Error reading branch history: %s", e)
            session.close()
            return pd.DataFrame(columns=["theta_rad", "theta_deg", "beta_deg", "lambda", "converged", "run_id"])
