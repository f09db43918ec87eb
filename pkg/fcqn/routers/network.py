# fcqn/routers/network.py
from fastapi import APIRouter, HTTPException

from fcqn.errors import TopologyError
from fcqn.network import build_fcqn, default_allocation
from fcqn.schemas import FcqnRequest

router = APIRouter(prefix="/network", tags=["network"])


@router.get("/allocation")
def get_default_allocation():
    return default_allocation().to_dict()


@router.post("/fcqn")
def create_fcqn(request: FcqnRequest):
    try:
        topology = build_fcqn(request.users, request.channel_pairs)
    except TopologyError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return topology.to_dict()
