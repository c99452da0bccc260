import { boot } from "./app";
import "./style.css";

void boot();
