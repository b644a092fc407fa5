/** Thin client over the assistant service's JSON API. */
export class ApiError extends Error {
    status;
    body;
    constructor(status, body) {
        super(body.message);
        this.status = status;
        this.body = body;
    }
}
async function request(url, init) {
    const resp = await fetch(url, {
        headers: { "content-type": "application/json" },
        ...init,
    });
    if (!resp.ok) {
        let body;
        try {
            body = (await resp.json());
        }
        catch {
            body = { code: "http_error", message: resp.statusText, detail: "" };
        }
        throw new ApiError(resp.status, body);
    }
    return (await resp.json());
}
export class AssistantClient {
    base;
    constructor(base = "") {
        this.base = base;
    }
    createSession(grid, chronic, mode = "paused") {
        return request(`${this.base}/api/sessions`, { method: "POST", body: JSON.stringify({ grid, chronic, mode }) });
    }
    getState(sid) {
        return request(`${this.base}/api/sessions/${sid}/state`);
    }
    advance(sid, steps = 1) {
        return request(`${this.base}/api/sessions/${sid}/advance`, {
            method: "POST",
            body: JSON.stringify({ steps }),
        });
    }
    getCandidates(sid) {
        return request(`${this.base}/api/sessions/${sid}/candidates`);
    }
    simulate(sid, action) {
        return request(`${this.base}/api/sessions/${sid}/simulate`, {
            method: "POST",
            body: JSON.stringify({ action }),
        });
    }
    applyCandidate(sid, candidateId) {
        return request(`${this.base}/api/sessions/${sid}/apply`, { method: "POST", body: JSON.stringify({ candidate_id: candidateId }) });
    }
    applyAction(sid, action) {
        return request(`${this.base}/api/sessions/${sid}/apply`, { method: "POST", body: JSON.stringify({ action }) });
    }
    getAudit(sid) {
        return request(`${this.base}/api/sessions/${sid}/audit`);
    }
}
