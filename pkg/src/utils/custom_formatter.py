import logging


class CustomFormatter(logging.Formatter):

    grey = "\x1b[38;20m"
    yellow = "\x1b[33;20m"
    red = "\x1b[31;20m"
    bold_red = "\x1b[31;1m"
    reset = "\x1b[0m"
    base_format = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    COLOURS = {
        logging.DEBUG: grey,
        logging.INFO: grey,
        logging.WARNING: yellow,
        logging.ERROR: red,
        logging.CRITICAL: bold_red,
    }

    def __init__(self, use_colour: bool = True):
        super().__init__()
        self.use_colour = use_colour
        # log files get the plain format, terminals get the coloured one
        self._formatters = {
            level: logging.Formatter(colour + self.base_format + self.reset if use_colour else self.base_format)
            for level, colour in self.COLOURS.items()
        }
        self._fallback = logging.Formatter(self.base_format)

    def format(self, record):
        return self._formatters.get(record.levelno, self._fallback).format(record)
