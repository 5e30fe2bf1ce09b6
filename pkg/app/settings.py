from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # Logging
    log: str = 'warning'

    # Proof backend: quorum | attested | none
    backend: str = 'quorum'

    # Quorum validators
    quorum_n: int = 4
    quorum_f: int = 1
    node_timeout_ticks: int = 1000  # 1 s of simulated time
    node_timeout_ms: int = 500
    node_rtt_ticks: int = 2

    # Attested signers
    attested_enclaves: int = 3
    attested_version: str = 'chrono-frontend/1.0'

    # Simulation
    event_budget: int = 2_000_000
    default_seed: int = 7

    # Store
    store_max_value_bytes: int = 64 * 1024

    # Artifacts
    out_dir: str = 'out'

    class Config:
        env_file = '.env'
        env_prefix = 'CHRONO_'


settings = Settings()
