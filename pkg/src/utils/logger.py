"""
日志系统模块
"""
import logging
import os
from datetime import datetime
from typing import List, Optional, Sequence

from colorama import init, Fore, Style

# 初始化colorama
init()


class Logger:
    def __init__(self, name: str, log_dir: str = "logs", console: bool = True):
        self.name = name
        self.log_dir = log_dir
        self.console = console
        self.logger = self._setup_logger()

    def _setup_logger(self) -> logging.Logger:
        """设置日志记录器: 文件记录 DEBUG 及以上"""
        if not os.path.exists(self.log_dir):
            os.makedirs(self.log_dir)

        logger = logging.getLogger(f"partition.{self.name}")
        logger.setLevel(logging.DEBUG)
        logger.propagate = False

        # 清除已有的处理器
        for handler in list(logger.handlers):
            handler.close()
        logger.handlers.clear()

        log_filename = os.path.join(self.log_dir, f"{self.name}_{datetime.now().strftime('%Y%m%d')}.log")
        file_handler = logging.FileHandler(log_filename, encoding='utf-8')
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
        ))
        logger.addHandler(file_handler)
        return logger

    def _print(self, text: str, end: str = "\n") -> None:
        if self.console:
            print(text, end=end, flush=True)

    def debug(self, message: str) -> None:
        """记录调试日志（只写文件）"""
        self.logger.debug(message)

    def info(self, message: str) -> None:
        """记录信息日志"""
        self.logger.info(message)
        self._print(f"{Fore.BLUE}[INFO] {message}{Style.RESET_ALL}")

    def success(self, message: str) -> None:
        """记录成功日志"""
        self.logger.info(f"SUCCESS: {message}")
        self._print(f"{Fore.GREEN}[SUCCESS] {message}{Style.RESET_ALL}")

    def warning(self, message: str) -> None:
        """记录警告日志"""
        self.logger.warning(message)
        self._print(f"{Fore.YELLOW}[WARNING] {message}{Style.RESET_ALL}")

    def error(self, message: str, exc_info: bool = False) -> None:
        """记录错误日志"""
        self.logger.error(message, exc_info=exc_info)
        self._print(f"{Fore.RED}[ERROR] {message}{Style.RESET_ALL}")

    def progress(self, current: int, total: int, message: str = "") -> None:
        """记录进度信息"""
        percentage = (current / total) * 100 if total > 0 else 0
        text = f"{self._create_progress_bar(percentage)} {current}/{total} ({percentage:.1f}%) {message}"
        self.logger.debug(text)
        try:
            self._print(f"\r{Fore.CYAN}{text}{Style.RESET_ALL}", end="")
        except UnicodeEncodeError:
            self._print(f"\rProgress: {current}/{total} ({percentage:.1f}%)", end="")
        if current >= total:
            self._print("")

    def _create_progress_bar(self, percentage: float, width: int = 20) -> str:
        """创建进度条"""
        filled = int(width * percentage / 100)
        return "[" + "=" * filled + "-" * (width - filled) + "]"

    def stage_start(self, stage_num: int, stage_name: str) -> None:
        """记录阶段开始"""
        message = f"开始阶段 {stage_num}: {stage_name}"
        self.logger.info(message)
        self._print(f"\n{Fore.MAGENTA}[STAGE START] {message}{Style.RESET_ALL}")
        self._print("-" * 50)

    def verdict(self, name: str, passed: bool, detail: str = "") -> None:
        """记录一条检验结论（PASS / FAIL）"""
        tag = "PASS" if passed else "FAIL"
        message = f"{tag} {name}" + (f" - {detail}" if detail else "")
        if passed:
            self.logger.info(message)
        else:
            self.logger.error(message)
        colour = Fore.GREEN if passed else Fore.RED
        self._print(f"{colour}[{tag}]{Style.RESET_ALL} {name}" + (f"  {detail}" if detail else ""))

    def table(self, headers: Sequence[str], rows: List[Sequence], title: Optional[str] = None) -> None:
        """以对齐的纯文本表格打印结果"""
        cells = [[str(h) for h in headers]] + [[_cell(x) for x in row] for row in rows]
        widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
        lines = [" | ".join(c.ljust(w) for c, w in zip(r, widths)) for r in cells]
        lines.insert(1, "-+-".join("-" * w for w in widths))
        if title:
            lines.insert(0, title)
        for line in lines:
            self.logger.info(line)
            self._print(line)

    def file_created(self, file_path: str) -> None:
        """记录文件创建"""
        message = f"文件已创建: {file_path}"
        self.logger.info(message)
        self._print(f"{Fore.GREEN}[FILE] {message}{Style.RESET_ALL}")


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)
