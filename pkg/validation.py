# validation.py
# Validates user-supplied selectors, sign patterns and search bounds.
# Imported by cli.py and api.py; returns the same errors/warnings dict everywhere.

import re

from corpus import SYSTEMS, all_selectors, get_system
from config import SYMMETRY_MAX_SIZE

_PATTERN_RE = re.compile(r'^[+-]+$')


def _result(errors, warnings, **extra) -> dict:
    return {
        'valid':    len(errors) == 0,
        'errors':   errors,
        'warnings': warnings,
        **extra,
    }


def validate_pattern(system: str, pattern: str) -> dict:
    errors, warnings = [], []

    if system not in SYSTEMS:
        errors.append(f"Unknown system '{system}'. Valid: {', '.join(SYSTEMS)}")
        return _result(errors, warnings)

    pattern = (pattern or '').strip()
    if not _PATTERN_RE.match(pattern):
        errors.append(f"Pattern '{pattern}' must consist of '+' and '-' only")
    else:
        size = len(get_system(system))
        if len(pattern) != size:
            errors.append(f"Pattern has {len(pattern)} marks but '{system}' has {size} axioms")
        elif '-' not in pattern:
            warnings.append('All-positive pattern: this is the system itself')

    return _result(errors, warnings, pattern=pattern)


def validate_selectors(names) -> dict:
    errors, warnings = [], []
    known = set(all_selectors()) | set(SYSTEMS)

    names = [n.strip() for n in names if n and n.strip()]
    if not names:
        errors.append('No selectors given')
    unknown = [n for n in names if n not in known]
    if unknown:
        errors.append(f'Unknown selectors: {unknown}')

    # Duplicates (warning only)
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        warnings.append(f'Repeated selectors ignored: {dupes}')

    return _result(errors, warnings, selectors=names)


def validate_caps(**caps) -> dict:
    errors, warnings = [], []
    for name, value in caps.items():
        if value is None or isinstance(value, bool):
            continue
        if name == 'depth_cap':
            if value < 0:
                errors.append(f'{name} must be non-negative, got {value}')
        elif value < 1:
            errors.append(f'{name} must be at least 1, got {value}')
    if (caps.get('size') or 0) > SYMMETRY_MAX_SIZE and caps.get('symmetry_breaking'):
        errors.append(f'Symmetry breaking is limited to sizes up to {SYMMETRY_MAX_SIZE}')
    if (caps.get('cap') or 0) > 8 or (caps.get('size') or 0) > 8:
        warnings.append('Domains above 8 elements can take a long time to ground')
    return _result(errors, warnings)
