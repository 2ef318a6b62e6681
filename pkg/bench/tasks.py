import logging

from celery import shared_task

from policy.linear import params_from_payload

from .config import build_config
from .results import failed_result
from .runner import optimize_one

logger = logging.getLogger(__name__)


@shared_task
def optimize_lead(payload: dict) -> dict:
    """Optimize one lead; failures come back as an error record instead of raising."""
    index, lead = payload['index'], payload['lead']
    method = (payload.get('config') or {}).get('method', 'pgpo')
    try:
        config = build_config(payload['config'])
        params = None if payload.get('checkpoint') is None else params_from_payload(payload['checkpoint'])
        result, log = optimize_one(config, params, lead, index)
    except Exception as exc:
        logger.exception(f'lead {index} ({lead}) failed: {exc}')
        return {'result': failed_result(lead, index, str(exc), method).to_dict(), 'log': []}
    return {'result': result.to_dict(), 'log': log}
