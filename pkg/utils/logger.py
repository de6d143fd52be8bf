"""
Structured logging utility for the simulator and decoder.
Logs trials, grid points, decodes and sweep summaries.
"""

import json
import logging
import os
from datetime import datetime
from pathlib import Path
from typing import Dict, Any, Optional

from dotenv import load_dotenv

load_dotenv()


class StructuredLogger:
    """Structured logger for simulation and decoding runs."""

    def __init__(self, log_dir: Optional[str] = None, level: Optional[str] = None):
        """
        Initialize structured logger.

        Args:
            log_dir: Directory to store log files (defaults to OCC_LOG_DIR or "logs")
            level: Logging level name (defaults to OCC_LOG_LEVEL or "INFO")
        """
        self.log_dir = Path(log_dir or os.getenv("OCC_LOG_DIR", "logs"))
        self.log_dir.mkdir(parents=True, exist_ok=True)

        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        self.log_file = self.log_dir / f"occsim_{timestamp}.log"
        self.json_log_file = self.log_dir / f"occsim_{timestamp}.jsonl"

        level_name = (level or os.getenv("OCC_LOG_LEVEL", "INFO")).upper()
        log_level = getattr(logging, level_name, logging.INFO)

        self.logger = logging.getLogger("occsim")
        self.logger.setLevel(log_level)
        self.logger.propagate = False

        formatter = logging.Formatter(
            '[%(asctime)s] [%(name)s] %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        )

        if not self.logger.handlers:
            file_handler = logging.FileHandler(self.log_file)
            file_handler.setLevel(log_level)
            file_handler.setFormatter(formatter)

            console_handler = logging.StreamHandler()
            console_handler.setLevel(logging.WARNING)
            console_handler.setFormatter(formatter)

            self.logger.addHandler(file_handler)
            self.logger.addHandler(console_handler)

    def log_trial(self, point: Dict[str, Any], phase_s: float, headers_found: int,
                  correct_bits: int, received_code: Optional[str]):
        """Log one simulated capture and its decode."""
        self.logger.debug(
            f"Trial {point} phase={phase_s * 1e6:.2f}us headers={headers_found} "
            f"correct={correct_bits} code={received_code}"
        )
        self._write_json({
            "type": "trial",
            "point": point,
            "phase_s": phase_s,
            "headers_found": headers_found,
            "correct_bits": correct_bits,
            "received_code": received_code,
            "timestamp": datetime.now().isoformat()
        })

    def log_grid_point(self, point: Dict[str, Any], success_rate: float, images_decoded: int,
                       execution_time_ms: float):
        """Log an aggregated grid point."""
        self.logger.info(
            f"Point {point} - SR {success_rate:.1f}%, {images_decoded} decoded, {execution_time_ms:.2f}ms"
        )
        self._write_json({
            "type": "grid_point",
            "point": point,
            "success_rate_pct": success_rate,
            "images_decoded": images_decoded,
            "execution_time_ms": execution_time_ms,
            "timestamp": datetime.now().isoformat()
        })

    def log_decode(self, file: str, report: Dict[str, Any]):
        """Log decoding of an image file."""
        self.logger.info(f"Decode {file}: headers={report.get('headers_found')} "
                         f"code={report.get('received_code')}")
        self._write_json({"type": "decode", "file": file, "report": report,
                          "timestamp": datetime.now().isoformat()})

    def log_warning(self, message: str, **context: Any):
        """Log a recoverable anomaly."""
        self.logger.warning(message)
        self._write_json({"type": "warning", "message": message, "context": context,
                          "timestamp": datetime.now().isoformat()})

    def log_error(self, where: str, error: str):
        """Log an isolated failure (grid row or image)."""
        self.logger.error(f"[{where}] Error: {error}")
        self._write_json({"type": "error", "where": where, "error": error,
                          "timestamp": datetime.now().isoformat()})

    def log_sweep_summary(self, rows: int, total_time_ms: Optional[float] = None):
        """Log the end of a sweep."""
        self.logger.info(f"Sweep finished - {rows} rows")
        if total_time_ms is not None:
            self.logger.info(f"Total Execution Time: {total_time_ms:.2f}ms")
        self._write_json({
            "type": "sweep_summary",
            "rows": rows,
            "total_execution_time_ms": total_time_ms,
            "timestamp": datetime.now().isoformat()
        })

    def _write_json(self, data: Dict[str, Any]):
        """Write JSON log entry."""
        try:
            with open(self.json_log_file, 'a', encoding='utf-8') as f:
                f.write(json.dumps(data, ensure_ascii=False) + '\n')
        except Exception as e:
            self.logger.warning(f"Failed to write JSON log: {e}")


# Global logger instance
_logger_instance: Optional[StructuredLogger] = None


def get_logger() -> StructuredLogger:
    """Get or create global logger instance."""
    global _logger_instance
    if _logger_instance is None:
        _logger_instance = StructuredLogger()
    return _logger_instance
