"""Loopback chat-completions mock for CLI judge tests.

Usage: mock_judge_server.py {valid|malformed}
Prints the chosen port on stdout, then serves until killed. In "valid"
mode it scores every conversation turn 1; in "malformed" mode it returns
non-JSON content.
"""

import json
import re
import sys
from http.server import BaseHTTPRequestHandler, HTTPServer

MODE = sys.argv[1] if len(sys.argv) > 1 else "valid"


class Handler(BaseHTTPRequestHandler):
    def do_POST(self):  # noqa: N802
        length = int(self.headers.get("Content-Length", "0"))
        body = json.loads(self.rfile.read(length))
        prompt = body["messages"][0]["content"]
        turns = len(re.findall(r"\[Turn \d+\]", prompt))
        if MODE == "valid":
            scores = {f"score_{i}": 1 for i in range(turns)}
            content = "<think>every turn looks clean</think>" + json.dumps(scores)
        else:
            content = "no json for you"
        reply = {"choices": [{"message": {"role": "assistant", "content": content}}]}
        data = json.dumps(reply).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):  # silence request logging
        pass


def main():
    server = HTTPServer(("127.0.0.1", 0), Handler)
    print(server.server_port, flush=True)
    server.serve_forever()


if __name__ == "__main__":
    main()
