import { ApiClient } from "./api.js";
import { LabelingApp, renderSessionPicker } from "./app.js";

async function boot(): Promise<void> {
  const mount = document.getElementById("app");
  if (!mount) throw new Error("missing #app mount point");
  const api = new ApiClient("");
  const params = new URLSearchParams(window.location.search);
  const sessionId = params.get("session");
  if (!sessionId) {
    await renderSessionPicker(api, mount, (picked) => {
      window.location.search = `?session=${picked}`;
    });
    return;
  }
  const app = new LabelingApp(api, sessionId, mount);
  await app.start();
}

void boot();
