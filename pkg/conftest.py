from app.log_config import configure_logging


# Simulations emit a debug line per rejected message; keep test output readable.
configure_logging('warning')
