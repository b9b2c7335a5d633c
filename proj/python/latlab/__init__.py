from ._latlab import *  # noqa: F401,F403
