import uvicorn
from fastapi import FastAPI

from .endpoints import (
    gain,
    scan_cavity,
    state,
    lock
)
from settings import IP, PORT

"""
This module sets up and runs the OPO lock simulator API using FastAPI. It defines the
main API application, a root endpoint, and includes the routers of every endpoint.
"""

api = FastAPI(title="OPO Lock Simulator")


@api.get("/")
async def read_root():
    """
    API root endpoint that provides a welcome message.

    Returns:
        dict: A dictionary containing a welcome message.
    """
    return {"message": "Welcome to the OPO lock simulator API!"}


api.include_router(gain.router, tags=["Gain"])
api.include_router(scan_cavity.router, tags=["Scan Cavity"])
api.include_router(state.router, tags=["State"])
api.include_router(lock.router, tags=["Lock"])


def run_api():
    """
    Run the API using uvicorn on the IP and PORT of the settings, without auto-reload.
    """
    uvicorn.run(api, host=IP, port=PORT, reload=False)
