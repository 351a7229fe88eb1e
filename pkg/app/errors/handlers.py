from flask import jsonify
from werkzeug.exceptions import HTTPException
from app.errors import bp
from app.exceptions import InterleaveError, LimitExceededError


def error_response(status: int, kind: str, message: str):
    response = jsonify({'error': kind, 'message': message})
    response.status_code = status
    return response


@bp.app_errorhandler(LimitExceededError)
def limit_exceeded(error):
    response = error_response(413, error.kind, str(error))
    if error.predicted is not None:
        response.headers['X-Predicted-Size'] = str(error.predicted)
    return response


@bp.app_errorhandler(InterleaveError)
def domain_error(error):
    return error_response(400, error.kind, str(error))


@bp.app_errorhandler(404)
def not_found_error(error):
    return error_response(404, 'not-found', 'no such endpoint')


@bp.app_errorhandler(HTTPException)
def http_error(error):
    return error_response(error.code or 500, 'http', error.description)


@bp.app_errorhandler(500)
def internal_error(error):
    return error_response(500, 'internal', 'internal server error')
