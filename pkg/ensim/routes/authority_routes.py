"""
Authority routes - Publish and download diagnosis key batches over HTTP.

The facade only ever accepts temporary exposure keys. Anything that looks
like a proximity identifier or a received record is refused.
"""

from flask import Blueprint, current_app, jsonify, request

from ensim.protocol.authority import UploadRejectedError
from ensim.protocol.keyschedule import KeyScheduleError, TemporaryExposureKey


bp = Blueprint('authority', __name__, url_prefix='/api')

FORBIDDEN_FIELDS = ('epi', 'epis', 'identifiers', 'received_records')


def _server():
    return current_app.extensions['authority']


@bp.route('/diagnosis-keys', methods=['POST'])
def upload_diagnosis_keys():
    """
    Publish the keys of a diagnosed user as one batch.

    Request body:
        - uploader: Who the authority diagnosed (required)
        - keys: List of {day, key_hex} (required, at most AUTHORITY_MAX_KEYS_PER_UPLOAD)
        - report_type: confirmed-test, clinical-diagnosis or self-report (default: confirmed-test)
        - time: Simulation minute of publication (default: 0)

    Returns:
        JSON with the new batch id
    """
    data = request.get_json(silent=True)
    if not isinstance(data, dict):
        return jsonify({'error': 'JSON object body is required'}), 400

    forbidden = [f for f in FORBIDDEN_FIELDS if f in data]
    if forbidden:
        return jsonify({'error': f'Only temporary exposure keys are accepted, got {forbidden}'}), 400

    if not data.get('uploader'):
        return jsonify({'error': 'Uploader is required'}), 400

    raw_keys = data.get('keys')
    if not isinstance(raw_keys, list) or not raw_keys:
        return jsonify({'error': 'At least one key is required'}), 400

    max_keys = current_app.config['AUTHORITY_MAX_KEYS_PER_UPLOAD']
    if len(raw_keys) > max_keys:
        return jsonify({'error': f'At most {max_keys} keys per upload'}), 400

    time = data.get('time', 0)
    if isinstance(time, bool) or not isinstance(time, int) or time < 0:
        return jsonify({'error': 'Time must be a non-negative integer'}), 400

    keys = []
    for i, entry in enumerate(raw_keys):
        if not isinstance(entry, dict) or 'key_hex' not in entry or 'day' not in entry:
            return jsonify({'error': f'Key {i} must have day and key_hex'}), 400
        try:
            keys.append(TemporaryExposureKey.from_hex(entry['day'], entry['key_hex']))
        except (KeyScheduleError, TypeError, ValueError) as e:
            return jsonify({'error': f'Key {i} is invalid: {e}'}), 400

    try:
        batch_id = _server().upload_keys(keys, data.get('report_type', 'confirmed-test'), time, data['uploader'])
    except UploadRejectedError as e:
        return jsonify({'error': str(e)}), 400

    current_app.logger.info(f"HTTP upload from {data['uploader']} published as batch {batch_id}")
    return jsonify({'batch_id': batch_id, 'message': f'Published {len(keys)} keys'}), 201


@bp.route('/diagnosis-keys', methods=['GET'])
def download_diagnosis_keys():
    """
    Download batches published after a cursor.

    Query params:
        - since: Last batch id already seen (default: 0)

    Returns:
        JSON with batches and the newest batch id
    """
    since = request.args.get('since', 0, type=int)
    if since < 0:
        return jsonify({'error': 'since must be >= 0'}), 400

    server = _server()
    return jsonify({
        'batches': [b.to_dict() for b in server.download_since(since)],
        'last_batch_id': server.last_batch_id,
    })


@bp.route('/central-reports', methods=['GET'])
def list_central_reports():
    """
    Match results apps sent back to the server.

    Empty unless a re-centralizing app is deployed.
    """
    return jsonify({'central_reports': [e.to_dict() for e in _server().central_reports]})
