"""
Logging system
"""

import os
import sys
import time


class Logger:
    """
    Timestamped, level-tagged log lines.

    Lines go to stderr so tables written to stdout stay clean. When a logfile
    is given the same lines are appended to it; its folder is created on demand.
    """

    def __init__(self, logfile=None, verbose=False, stream=None):
        self.logfile = logfile
        self.verbose = verbose
        self.stream = stream
        if logfile:
            folder = os.path.dirname(logfile)
            if folder:
                os.makedirs(folder, exist_ok=True)

    def log(self, level, message):
        timestamp = time.strftime('%Y-%m-%d %H:%M:%S')
        formatted = f"[{timestamp}] [{level.upper()}] {message}"
        print(formatted, file=self.stream or sys.stderr)
        if self.logfile:
            with open(self.logfile, 'a', encoding='utf-8') as f:
                f.write(formatted + "\n")

    def debug(self, message):
        if self.verbose:
            self.log('debug', message)

    def info(self, message): self.log('info', message)
    def warn(self, message): self.log('warn', message)
    def error(self, message): self.log('error', message)


default_logger = Logger()
