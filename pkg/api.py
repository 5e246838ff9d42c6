# api.py
# Run: uvicorn api:app --host 0.0.0.0 --port 8000
# Docs: http://localhost:8000/docs
#
# HTTP surface over the same queries as cli.py.

from __future__ import annotations

import logging
from datetime import datetime
from typing import List, Literal, Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, field_validator, model_validator

from config import DEFAULT_CAP, DEFAULT_DEPTH_CAP, DEFAULT_SIZE_CAP, VERSION, Settings
from corpus import SYSTEMS, CorpusError, get_system, resolve_all, resolve_goal, signed_set
from experiments import EXPERIMENTS, run_experiment
from finder import find_model, minimal_model_size
from formula import FormulaError
from model import ModelError
from prover import NotDerivableError, SignatureMismatch, entails, needed_axioms
from validation import validate_pattern, validate_selectors

logger = logging.getLogger(__name__)

# ----- SCHEMAS ------------------------------------
SystemName = Literal['huntington', 'huntington_prime', 'mcphee1', 'mcphee2', 'mcphee3']
ExperimentName = Literal['independence-models', 'detached-forward', 'detached-backward',
                         'equivalence', 'separation', 'table1', 'table2', 'table3']


def _check_pattern(system: str, pattern: Optional[str]) -> Optional[str]:
    if pattern is None:
        return pattern
    result = validate_pattern(system, pattern)
    if not result['valid']:
        raise ValueError('; '.join(result['errors']))
    return result['pattern']


def _check_selectors(v: List[str]) -> List[str]:
    if not v:
        return v
    result = validate_selectors(v)
    if not result['valid']:
        raise ValueError('; '.join(result['errors']))
    return v


class FindModelRequest(BaseModel):
    system: SystemName
    pattern: Optional[str] = None
    size: int
    symmetry_breaking: bool = False

    @model_validator(mode='after')
    def valid_pattern(self):
        self.pattern = _check_pattern(self.system, self.pattern)
        return self

    @field_validator('size')
    @classmethod
    def size_positive(cls, v: int) -> int:
        if not 1 <= v <= 8:
            raise ValueError('size must be between 1 and 8')
        return v


class MinModelRequest(BaseModel):
    system: SystemName
    pattern: Optional[str] = None
    hypotheses: List[str] = []
    cap: int = DEFAULT_CAP

    @model_validator(mode='after')
    def valid_pattern(self):
        self.pattern = _check_pattern(self.system, self.pattern)
        return self

    @field_validator('hypotheses')
    @classmethod
    def known_hypotheses(cls, v: List[str]) -> List[str]:
        return _check_selectors(v)

    @field_validator('cap')
    @classmethod
    def cap_positive(cls, v: int) -> int:
        if not 1 <= v <= 8:
            raise ValueError('cap must be between 1 and 8')
        return v


class DeriveRequest(BaseModel):
    premises: List[str]
    goal: str
    without: List[str] = []
    depth_cap: int = DEFAULT_DEPTH_CAP
    size_cap: int = DEFAULT_SIZE_CAP
    minimize: bool = False

    @field_validator('premises')
    @classmethod
    def known_premises(cls, v: List[str]) -> List[str]:
        return _check_selectors(v)

    @field_validator('goal')
    @classmethod
    def known_goal(cls, v: str) -> str:
        _check_selectors([v])
        return v

    @field_validator('depth_cap')
    @classmethod
    def depth_non_negative(cls, v: int) -> int:
        if v < 0:
            raise ValueError('Must be non-negative')
        return v

    @field_validator('size_cap')
    @classmethod
    def size_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError('Must be at least 1')
        return v


class NeededRequest(BaseModel):
    premises: List[str]
    goal: str

    @field_validator('premises')
    @classmethod
    def known_premises(cls, v: List[str]) -> List[str]:
        return _check_selectors(v)

    @field_validator('goal')
    @classmethod
    def known_goal(cls, v: str) -> str:
        _check_selectors([v])
        return v


class ReproduceRequest(BaseModel):
    experiment: ExperimentName
    jobs: Optional[int] = 1


# ---- APP --------------------------------------------
app = FastAPI(
    title='BetweenLab API',
    description='Independence models and derivability checks for betweenness axioms.',
    version=VERSION,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=['*'],
    allow_methods=['*'],
    allow_headers=['*'],
)

INPUT_ERRORS = (CorpusError, FormulaError, ModelError, SignatureMismatch, NotDerivableError)


def _bad_request(e: Exception):
    return HTTPException(status_code=400, detail={'success': False, 'error': str(e)})


def _formulas(system: str, pattern: Optional[str], extra: List[str]):
    s = get_system(system)
    formulas = signed_set(s, pattern) if pattern else s.named()
    return formulas + resolve_all(extra)


# ---- ENDPOINTS -----------------------------------------

@app.get('/api/health')
def health_check():
    return {
        'status': 'healthy',
        'version': VERSION,
        'systems': list(SYSTEMS),
        'experiments': list(EXPERIMENTS),
        'timestamp': datetime.now().isoformat(),
    }


@app.post('/api/find-model')
def api_find_model(req: FindModelRequest):
    try:
        verdict = find_model(_formulas(req.system, req.pattern, []), req.size,
                             symmetry_breaking=req.symmetry_breaking)
    except INPUT_ERRORS as e:
        raise _bad_request(e)
    if verdict.satisfiable:
        return {'success': True, 'satisfiable': True, 'model': verdict.model.to_json()}
    return {'success': True, 'satisfiable': False, 'core': sorted(verdict.core)}


@app.post('/api/min-model')
def api_min_model(req: MinModelRequest):
    try:
        result = minimal_model_size(_formulas(req.system, req.pattern, req.hypotheses), req.cap,
                                    system=req.system, pattern=req.pattern)
    except INPUT_ERRORS as e:
        raise _bad_request(e)
    return {'success': True, **result.to_dict()}


@app.post('/api/derive')
def api_derive(req: DeriveRequest):
    try:
        premises = [p for p in resolve_all(req.premises) if p.name not in set(req.without)]
        goal = resolve_goal(req.goal)
        verdict = entails(premises, goal.formula, req.depth_cap, req.size_cap, minimize=req.minimize)
    except INPUT_ERRORS as e:
        raise _bad_request(e)
    return {'success': True, 'goal': goal.name, 'premises': [p.name for p in premises],
            **verdict.to_dict()}


@app.post('/api/needed')
def api_needed(req: NeededRequest):
    try:
        goal = resolve_goal(req.goal)
        table = needed_axioms(resolve_all(req.premises), goal.formula)
    except INPUT_ERRORS as e:
        raise _bad_request(e)
    return {'success': True, 'goal': goal.name,
            'needed': {name: nv.to_dict() for name, nv in table.items()}}


@app.post('/api/reproduce')
def api_reproduce(req: ReproduceRequest):
    try:
        report = run_experiment(req.experiment, Settings.from_env(jobs=req.jobs))
    except Exception as e:
        logger.exception('reproduce %s failed', req.experiment)
        raise HTTPException(status_code=500, detail={'success': False, 'error': str(e)})
    return {'success': True, 'ok': report.ok, 'elapsed_seconds': report.elapsed_seconds,
            **report.model_dump()}


# ----- RUN -------------------------------------------
if __name__ == '__main__':
    import uvicorn
    print(f'\nBetweenLab API - v{VERSION}')
    print('Endpoints: /api/health, /api/find-model, /api/min-model,')
    print('   /api/derive, /api/needed, /api/reproduce')
    print('Docs: http://localhost:8000/docs\n')
    uvicorn.run(app, host='0.0.0.0', port=8000)
