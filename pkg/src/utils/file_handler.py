import os
from pathlib import Path
from typing import Any, Dict

import chardet

from ..internal.errors import ParseError
from .logging_setup import get_logger

logger = get_logger('utils.file_handler')


class FileHandler:
    """
    Reads instance, chain-map and CE-isomorphism files and writes command output files.
    Rejects oversized and binary input before decoding.
    """

    # File size limit (10MB)
    MAX_FILE_SIZE = 10 * 1024 * 1024

    # Sample size for detection
    DETECTION_SAMPLE_SIZE = 4096

    def get_file_info(self, file_path: str) -> Dict[str, Any]:
        path = Path(file_path)
        if not path.exists():
            return {"error": "File does not exist"}
        try:
            size = path.stat().st_size
            info: Dict[str, Any] = {
                "path": str(path.resolve()),
                "size": size,
                "size_human": self._format_size(size),
                "is_file": path.is_file(),
                "readable": os.access(file_path, os.R_OK),
            }
            if info["is_file"] and info["readable"]:
                with open(file_path, 'rb') as f:
                    sample = f.read(self.DETECTION_SAMPLE_SIZE)
                info["is_binary"] = self._is_binary_sample(sample)
                info["sample"] = sample
            return info
        except OSError as e:
            logger.error(f"File info error: {str(e)}")
            return {"error": str(e)}

    def _get_printable_ratio(self, sample: bytes) -> float:
        if not sample:
            return 1.0
        printable = sum(1 for byte in sample if 32 <= byte <= 126 or byte in (9, 10, 13) or byte >= 128)
        return printable / len(sample)

    def _is_binary_sample(self, sample: bytes) -> bool:
        if not sample:
            return False
        if sample.startswith((b'\xff\xfe', b'\xfe\xff')):
            return False
        if sample.count(b'\x00') > len(sample) / 4:
            return True
        return self._get_printable_ratio(sample) < 0.65

    def _format_size(self, size_bytes: float) -> str:
        for unit in ['B', 'KB', 'MB', 'GB']:
            if size_bytes < 1024:
                return f"{size_bytes:.1f}{unit}"
            size_bytes /= 1024
        return f"{size_bytes:.1f}TB"

    def _detect_encoding(self, sample: bytes) -> str:
        """BOM first, then UTF-8, then chardet."""
        if sample.startswith(b'\xef\xbb\xbf'):
            return 'utf-8-sig'
        if sample.startswith(b'\xff\xfe') or sample.startswith(b'\xfe\xff'):
            return 'utf-16'
        try:
            sample.decode('utf-8')
            return 'utf-8'
        except UnicodeDecodeError:
            pass
        try:
            result = chardet.detect(sample)
            if result['confidence'] > 0.7:
                return result['encoding'] or 'utf-8'
        except Exception:
            pass
        return 'utf-8'

    def read_text(self, file_path: str, max_size: int = 0) -> str:
        """Decoded file contents, or ParseError naming why the file cannot be used."""
        limit = max_size or self.MAX_FILE_SIZE
        info = self.get_file_info(file_path)
        if "error" in info:
            raise ParseError(f"{file_path}: {info['error']}")
        if not info["is_file"]:
            raise ParseError(f"{file_path}: not a file")
        if not info["readable"]:
            raise ParseError(f"{file_path}: not readable")
        if info["size"] > limit:
            raise ParseError(f"{file_path}: size exceeds limit ({info['size_human']})")
        if info["is_binary"]:
            raise ParseError(f"{file_path}: binary content")
        encoding = self._detect_encoding(info["sample"])
        try:
            with open(file_path, 'rb') as f:
                text = f.read().decode(encoding)
        except (UnicodeDecodeError, LookupError) as e:
            raise ParseError(f"{file_path}: encoding error ({e})") from None
        logger.debug(f"Read {info['size_human']} from {file_path} as {encoding}")
        return text

    def write_text(self, file_path: str, text: str) -> None:
        path = Path(file_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding='utf-8')
        logger.info(f"Wrote {file_path}")
