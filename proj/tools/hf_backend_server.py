#!/usr/bin/env python3
"""Model server for emprobe's real backend.

Serves the wire protocol the C++ http_backend speaks:

  GET  /info      -> {"model_id", "hidden_dim", "num_layers"}
  POST /embed     {"text", "layer", "options", "steering"?} -> {"model_id", "layer", "values"}
  POST /generate  {"prompt", "sampling": {"temperature", "max_tokens", "seed"}, "options", "steering"?}
                  -> {"text", "tokens_emitted"}

Layer L is the output of transformer block L. Embeddings mean-pool that
output over every token of the input. Steering {"layer", "alpha",
"direction"} adds alpha * direction to the output of block `layer` at every
position, so later blocks see the shifted stream; it is active for the prompt
pass and for every generated token.

--model loads a Hugging Face causal LM (needs the weights locally or network
access). --tiny-random builds a small randomly initialised GPT-2 with a
printable-ASCII character vocabulary, for exercising the pipeline without
downloads.
"""

import argparse
import json
import logging
import os
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import torch

log = logging.getLogger("hf_backend_server")


class CharTokenizer:
    """Printable ASCII, one token per character; anything else maps to '?'."""

    first = 32
    size = 95

    def encode(self, text):
        ids = []
        for ch in text:
            c = ord(ch)
            ids.append(c - self.first if self.first <= c < self.first + self.size else ord("?") - self.first)
        return ids or [0]

    def decode(self, ids):
        return "".join(chr(self.first + int(i)) for i in ids if 0 <= int(i) < self.size)


class Model:
    def __init__(self, args):
        torch.manual_seed(args.init_seed)
        if args.tiny_random:
            from transformers import GPT2Config, GPT2LMHeadModel

            cfg = GPT2Config(
                vocab_size=CharTokenizer.size,
                n_positions=1024,
                n_embd=args.tiny_dim,
                n_layer=args.tiny_layers,
                n_head=4,
                bos_token_id=None,
                eos_token_id=None,
            )
            self.model = GPT2LMHeadModel(cfg)
            self.tokenizer = None
            self.chars = CharTokenizer()
            self.model_id = args.model_id or f"tiny-random-gpt2-d{args.tiny_dim}-l{args.tiny_layers}-s{args.init_seed}"
        else:
            from transformers import AutoModelForCausalLM, AutoTokenizer

            dtype = getattr(torch, args.dtype)
            self.tokenizer = AutoTokenizer.from_pretrained(args.model)
            self.model = AutoModelForCausalLM.from_pretrained(args.model, torch_dtype=dtype)
            self.chars = None
            self.model_id = args.model_id or args.model
        self.model.to(args.device)
        self.model.eval()
        self.device = args.device
        self.blocks = find_blocks(self.model)
        self.hidden_dim = int(self.model.config.hidden_size)
        # one request at a time: hooks are model-global
        self.lock = threading.Lock()

    def info(self):
        return {"model_id": self.model_id, "hidden_dim": self.hidden_dim, "num_layers": len(self.blocks)}

    def encode(self, text):
        if self.chars:
            ids = self.chars.encode(text)
        else:
            ids = self.tokenizer(text, add_special_tokens=True)["input_ids"] or [self.tokenizer.eos_token_id]
        return torch.tensor([ids], device=self.device)

    def decode(self, ids):
        if self.chars:
            return self.chars.decode(ids)
        return self.tokenizer.decode(ids, skip_special_tokens=True)

    def steering_hook(self, steering):
        if not steering:
            return None
        layer = int(steering["layer"])
        if not 0 <= layer < len(self.blocks):
            raise ValueError(f"steering layer {layer} outside [0, {len(self.blocks)})")
        direction = torch.tensor(steering["direction"], dtype=torch.float32, device=self.device)
        if direction.numel() != self.hidden_dim:
            raise ValueError(f"steering direction has {direction.numel()} values, expected {self.hidden_dim}")
        shift = float(steering["alpha"]) * direction

        def hook(_module, _inputs, output):
            if isinstance(output, tuple):
                return (output[0] + shift.to(output[0].dtype),) + tuple(output[1:])
            return output + shift.to(output.dtype)

        return self.blocks[layer].register_forward_hook(hook)

    def embed(self, text, layer, steering):
        if not 0 <= layer < len(self.blocks):
            raise ValueError(f"layer {layer} outside [0, {len(self.blocks)})")
        captured = {}

        def capture(_module, _inputs, output):
            captured["h"] = output[0] if isinstance(output, tuple) else output

        with self.lock, torch.no_grad():
            # hooks run in registration order: a steer at this same layer must land before the capture
            handles = [h for h in (self.steering_hook(steering),) if h is not None]
            handles.append(self.blocks[layer].register_forward_hook(capture))
            try:
                self.model(self.encode(text))
            finally:
                for h in handles:
                    h.remove()
        h = captured["h"][0].float().mean(dim=0)
        return h.cpu().tolist()

    def generate(self, prompt, sampling, steering):
        temperature = float(sampling.get("temperature", 0.7))
        max_tokens = int(sampling.get("max_tokens", 128))
        seed = int(sampling.get("seed", 0)) % (2**63)
        if max_tokens <= 0:
            raise ValueError("max_tokens must be positive")
        with self.lock, torch.no_grad():
            handle = self.steering_hook(steering)
            try:
                torch.manual_seed(seed)
                ids = self.encode(prompt)
                kwargs = dict(max_new_tokens=max_tokens, attention_mask=torch.ones_like(ids))
                if temperature > 0:
                    kwargs.update(do_sample=True, temperature=temperature, top_k=0)
                else:
                    kwargs.update(do_sample=False)
                pad = self.tokenizer.eos_token_id if self.tokenizer else None
                if pad is not None:
                    kwargs["pad_token_id"] = pad
                if self.chars:
                    # no end-of-text token in the character vocabulary
                    kwargs.update(eos_token_id=None, pad_token_id=0, min_new_tokens=max_tokens)
                out = self.model.generate(ids, **kwargs)
            finally:
                if handle is not None:
                    handle.remove()
        new = out[0, ids.shape[1]:].tolist()
        return {"text": self.decode(new), "tokens_emitted": len(new)}


def find_blocks(model):
    for path in ("transformer.h", "model.layers", "gpt_neox.layers", "model.decoder.layers"):
        obj = model
        try:
            for part in path.split("."):
                obj = getattr(obj, part)
        except AttributeError:
            continue
        return list(obj)
    raise RuntimeError("cannot locate the transformer block list of this architecture")


def make_handler(model):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, fmt, *args):
            log.debug(fmt, *args)

        def reply(self, status, body):
            data = json.dumps(body).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def do_GET(self):
            if self.path == "/info":
                self.reply(200, model.info())
            else:
                self.reply(404, {"error": f"no route {self.path}"})

        def do_POST(self):
            try:
                length = int(self.headers.get("Content-Length", "0"))
                req = json.loads(self.rfile.read(length) or b"{}")
                if self.path == "/embed":
                    layer = int(req["layer"])
                    values = model.embed(req["text"], layer, req.get("steering"))
                    self.reply(200, {"model_id": model.model_id, "layer": layer, "values": values})
                elif self.path == "/generate":
                    self.reply(200, model.generate(req["prompt"], req.get("sampling", {}), req.get("steering")))
                else:
                    self.reply(404, {"error": f"no route {self.path}"})
            except (KeyError, ValueError, TypeError) as e:
                self.reply(400, {"error": f"bad request: {e}"})
            except Exception as e:  # surfaced to the client as a backend error
                log.exception("request failed")
                self.reply(500, {"error": str(e)})

    return Handler


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    src = ap.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", help="Hugging Face model name or local path")
    src.add_argument("--tiny-random", action="store_true", help="small random GPT-2, no download")
    ap.add_argument("--model-id", help="identifier reported by /info (default: derived)")
    ap.add_argument("--host", default="127.0.0.1")
    ap.add_argument("--port", type=int, default=8077, help="0 picks a free port")
    ap.add_argument("--device", default="cpu")
    ap.add_argument("--dtype", default="float32", choices=["float32", "float16", "bfloat16"])
    ap.add_argument("--init-seed", type=int, default=0, help="seed for random initialisation")
    ap.add_argument("--tiny-dim", type=int, default=64)
    ap.add_argument("--tiny-layers", type=int, default=4)
    ap.add_argument("--port-file", help="write the bound port here once listening")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(message)s")

    model = Model(args)
    server = ThreadingHTTPServer((args.host, args.port), make_handler(model))
    port = server.server_address[1]
    log.info("serving %s on %s:%d (%d layers, dim %d)", model.model_id, args.host, port, len(model.blocks),
             model.hidden_dim)
    if args.port_file:
        with open(args.port_file + ".tmp", "w") as f:
            f.write(str(port))
        os.replace(args.port_file + ".tmp", args.port_file)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass


if __name__ == "__main__":
    main()
