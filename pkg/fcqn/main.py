# fcqn/main.py
from fastapi import FastAPI

from fcqn import __version__
from fcqn.db import Base, engine
from fcqn.routers import network, runs, scenarios

app = FastAPI(title="FCQN time-bin simulator", version=__version__)

Base.metadata.create_all(bind=engine)


@app.get("/health")
def health_check():
    return {"status": "ok"}


app.include_router(scenarios.router)
app.include_router(network.router)
app.include_router(runs.router)
